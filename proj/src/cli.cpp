#include "wlm/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "wlm/edit_classifier.hpp"
#include "wlm/http_fetch.hpp"
#include "wlm/irc_client.hpp"
#include "wlm/lang_graph.hpp"
#include "wlm/plausibility.hpp"
#include "wlm/rc_ingest.hpp"

namespace wlm {

namespace {

std::vector<std::string> split_words(const char* text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::atomic<bool> g_interrupted{false};

extern "C" void on_signal(int) { g_interrupted = true; }

std::pair<std::string, int> split_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0)
    throw UsageError("--listen expects host:port, got '" + address + "'");
  const std::string host = address.substr(0, colon);
  int port = 0;
  try {
    size_t used = 0;
    port = std::stoi(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw UsageError("--listen port is not a number: '" + address + "'");
  }
  if (port < 0 || port > 65535) throw UsageError("--listen port out of range");
  return {host, port};
}

}  // namespace

const std::vector<std::string>& default_languages() {
  static const std::vector<std::string> langs = split_words(
      "en de fr nl it "
      "es pl ru ja pt zh sv vi uk ca no fi fa cs ko hu ar ro ms tr id kk sr war sk eo "
      "lt da bg eu he vo sl hr hi et gl");
  return langs;
}

const std::vector<std::string>& all_languages() {
  static const std::vector<std::string> langs = split_words(
      "aa ab ace af ak als am an ang ar arc arz as ast av ay az ba bar bat-smg bcl be "
      "be-x-old bg bh bi bjn bm bn bo bpy br bs bug bxr ca cbk-zam cdo ce ceb ch chr chy "
      "ckb co cr crh cs csb cu cv cy da de diq dsb dv dz ee el eml en eo es et eu ext fa "
      "ff fi fiu-vro fj fo fr frp frr fur fy ga gag gan gd gl glk gn got gu gv ha hak haw "
      "he hi hif ho hr hsb ht hu hy hz ia id ie ig ii ik ilo io is it iu ja jbo jv ka kaa "
      "kab kbd kg ki kj kk kl km kn ko koi kr krc ks ksh ku kv kw ky la lad lb lbe lez lg "
      "li lij lmo ln lo lt ltg lv map-bms mdf mg mh mhr mi min mk ml mn mr mrj ms mt mus "
      "mwl my myv mzn na nah nap nds nds-nl ne new ng nl nn no nov nrm nso nv ny oc om or "
      "os pa pag pam pap pcd pdc pfl pi pih pl pms pnb pnt ps pt qu rm rmy rn ro roa-rup "
      "roa-tara ru rue rw sa sah sc scn sco sd se sg sh si simple sk sl sm sn so sq sr srn "
      "ss st stq su sv sw szl ta te tet tg th ti tk tl tn to tpi tr ts tt tum tw ty udm ug "
      "uk ur uz ve vec vep vi vls vo wa war wo wuu xal xh xmf yi yo za zea zh "
      "zh-classical zh-min-nan zh-yue zu");
  return langs;
}

RunConfig parse_args(int argc, const char* const* argv,
                     std::optional<std::string> env_fixture_root) {
  CLI::App app{"Detects breaking news from concurrent edits across Wikipedia languages", "wlm"};
  RunConfig config;

  std::string mode = "live";
  std::string languages;
  std::string replay_file;
  std::string speedup;
  std::string replay_start;
  std::string fixture_root;
  std::string corpus_root;
  std::string log_path;
  std::string listen;
  std::string fsync = "never";
  std::vector<std::string> bots;

  app.add_option("--mode", mode, "live or replay")->check(CLI::IsMember({"live", "replay"}));
  app.add_option("--languages", languages, "Comma-separated language codes, or 'all'");
  app.add_option("--replay-file", replay_file, "Replay file (offset_ms<TAB>channel<TAB>line)");
  app.add_option("--speedup", speedup, "Replay speed factor, or 'inf'");
  app.add_option("--replay-start", replay_start, "Virtual clock origin, overrides the file header");
  app.add_option("--min-occurrences", config.criteria.min_occurrences);
  app.add_option("--max-gap-secs", config.criteria.max_secs_between_edits);
  app.add_option("--min-editors", config.criteria.min_concurrent_editors);
  app.add_option("--max-idle-secs", config.criteria.max_secs_since_last_edit);
  app.add_option("--ttl-secs", config.criteria.ttl_secs);
  app.add_option("--eviction-period-secs", config.criteria.eviction_period_secs);
  app.add_flag("--include-bots", config.include_bots, "Count edits by bot accounts");
  app.add_option("--fixture-root", fixture_root,
                 "Directory with langlinks/ and compare/ fixtures (env WLM_FIXTURE_ROOT)");
  app.add_option("--corpus-root", corpus_root, "Directory with one search corpus per connector");
  app.add_option("--log-path", log_path, "Run log (JSON lines)");
  app.add_option("--log-fsync", fsync, "never or every-record")
      ->check(CLI::IsMember({"never", "every-record"}));
  app.add_option("--listen", listen, "host:port for the HTTP and push endpoints");
  app.add_flag("--hold", config.hold, "Replay: keep serving after end of file");
  // key = value lines using the long flag names, e.g. min-occurrences = 3
  app.set_config("--config", "", "Read flags from an INI/TOML file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  config.mode = mode == "replay" ? RunMode::kReplay : RunMode::kLive;

  if (languages.empty()) {
    config.languages = default_languages();
  } else if (languages == "all") {
    config.languages = all_languages();
  } else {
    std::stringstream in(languages);
    for (std::string tok; std::getline(in, tok, ',');) {
      if (tok.empty()) continue;
      try {
        channel_for_language(tok);
      } catch (const InvalidLanguage& e) {
        throw UsageError(e.what());
      }
      config.languages.push_back(tok);
    }
    if (config.languages.empty()) throw UsageError("--languages is empty");
  }

  if (config.mode == RunMode::kReplay) {
    if (replay_file.empty()) throw UsageError("--mode replay requires --replay-file");
    config.replay_file = replay_file;
    if (speedup.empty() || speedup == "inf" || speedup == "infinity") {
      config.speedup = std::numeric_limits<double>::infinity();
    } else {
      try {
        size_t used = 0;
        config.speedup = std::stod(speedup, &used);
        if (used != speedup.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw UsageError("--speedup expects a positive number or 'inf'");
      }
      if (!(config.speedup > 0)) throw UsageError("--speedup must be positive");
    }
    if (!replay_start.empty()) {
      config.replay_start = parse_iso8601(replay_start);
      if (!config.replay_start) throw UsageError("--replay-start expects YYYY-MM-DDTHH:MM:SSZ");
    }
  } else {
    if (!replay_file.empty()) throw UsageError("--replay-file requires --mode replay");
    if (!replay_start.empty()) throw UsageError("--replay-start requires --mode replay");
    if (config.hold) throw UsageError("--hold requires --mode replay");
  }

  try {
    config.criteria.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  if (!fixture_root.empty()) config.fixture_root = fixture_root;
  else if (env_fixture_root && !env_fixture_root->empty()) config.fixture_root = *env_fixture_root;
  if (!corpus_root.empty()) config.corpus_root = corpus_root;
  if (!log_path.empty()) config.log_path = log_path;
  config.fsync = fsync == "every-record" ? FsyncPolicy::kEveryRecord : FsyncPolicy::kNever;

  if (!listen.empty()) {
    split_address(listen);
    config.listen_address = listen;
  } else if (config.mode == RunMode::kLive) {
    config.listen_address = "127.0.0.1:8080";
  }
  return config;
}

void print_summary(std::ostream& out, const RunStats& s) {
  out << "events ingested:    " << s.events_ingested << "\n"
      << "parse errors:       " << s.parse_errors << "\n"
      << "clusters created:   " << s.clusters_created << "\n"
      << "candidates fired:   " << s.candidates_fired << "\n"
      << "verdicts recorded:  " << s.verdicts_recorded << "\n";
}

RunOutcome run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  RunOutcome outcome;
  try {
    std::unique_ptr<LangLinkSource> link_source;
    std::unique_ptr<DiffSource> diff_source;
    std::unique_ptr<HttplibGetter> http;
    if (config.fixture_root) {
      link_source = std::make_unique<FixtureLangLinks>(*config.fixture_root);
      diff_source = std::make_unique<FixtureDiffs>(*config.fixture_root);
    } else if (config.mode == RunMode::kLive) {
      http = std::make_unique<HttplibGetter>();
      link_source = std::make_unique<HttpLangLinks>(*http);
      diff_source = std::make_unique<HttpDiffs>(*http);
    } else {
      link_source = std::make_unique<NullLangLinks>();
      diff_source = std::make_unique<NullDiffs>();
    }
    LangLinkCache cache(*link_source);

    std::vector<std::shared_ptr<Connector>> connectors;
    if (config.corpus_root) connectors = corpus_connectors(*config.corpus_root);

    CandidateStore store;
    EventLog log(config.log_path, config.fsync);
    Broadcaster broadcaster;
    Gateway gateway(store, &log, broadcaster);

    PipelineOptions options;
    options.criteria = config.criteria;
    options.include_bots = config.include_bots;
    Pipeline pipeline(options, cache, *diff_source, connectors, gateway);

    std::unique_ptr<LiveIngest> ingest;
    gateway.set_health_provider([&] {
      json h = {{"mode", config.mode == RunMode::kLive ? "live" : "replay"},
                {"stats", pipeline.stats_json()}};
      if (ingest) {
        const IngestHealth ih = ingest->health();
        h["ingest"] = {{"connected", ih.connected},   {"connects", ih.connects},
                       {"reconnect_attempts", ih.reconnect_attempts},
                       {"lines", ih.lines},           {"joined", ih.joined},
                       {"last_error", ih.last_error}};
      }
      return h;
    });

    if (config.listen_address) {
      const auto [host, port] = split_address(*config.listen_address);
      const int bound = gateway.listen(host, port);
      err << "listening on " << host << ":" << bound << "\n";
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    auto wait_for_interrupt = [] {
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds{200});
    };

    if (config.mode == RunMode::kReplay) {
      const ReplayHeader header = validate_replay(*config.replay_file);
      ReplayOptions ro;
      ro.speedup = config.speedup;
      ro.start = config.replay_start ? config.replay_start : header.start;
      pipeline.set_tick_origin(ro.start.value_or(Timestamp{}));
      gateway.set_clock([&pipeline] { return pipeline.now(); });
      replay(*config.replay_file, ro, pipeline);
      gateway.flush();
      if (config.hold && config.listen_address) wait_for_interrupt();
    } else {
      pipeline.start_async();
      ingest = connect_live(config.languages, pipeline);
      wait_for_interrupt();
      // ingest stops, monitor drains, gateway flushes
      ingest->stop();
      pipeline.stop_async();
      gateway.flush();
    }
    gateway.stop();
    outcome.stats = pipeline.stats();
    print_summary(out, outcome.stats);
  } catch (const std::exception& e) {
    err << "wlm: " << e.what() << "\n";
    outcome.exit_code = 2;
  }
  return outcome;
}

int main_entry(int argc, const char* const* argv) {
  RunConfig config;
  try {
    const char* env = std::getenv("WLM_FIXTURE_ROOT");
    config = parse_args(argc, argv, env ? std::optional<std::string>(env) : std::nullopt);
  } catch (const HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "wlm: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  }
  return run(config, std::cout, std::cerr).exit_code;
}

}  // namespace wlm
