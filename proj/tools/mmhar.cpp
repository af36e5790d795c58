#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "mmhar/core/errors.hpp"
#include "mmhar/eval/metrics.hpp"
#include "mmhar/hrc/hrc.hpp"
#include "mmhar/ingest/recording.hpp"
#include "mmhar/ingest/transport.hpp"
#include "mmhar/model/checkpoint.hpp"
#include "mmhar/model/train.hpp"
#include "mmhar/pipeline/dataset.hpp"
#include "mmhar/runtime/runtime.hpp"
#include "mmhar/synth/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mmhar;

namespace {

int verbosity = 0;

void info(const std::string& msg) {
  if (verbosity >= 0) std::cerr << msg << '\n';
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

// Config echo first, so partial runs are detectable.
void echo_config(CLI::App* sub, const fs::path& dir) {
  fs::create_directories(dir);
  auto out = open_out(dir / "config_echo.ini");
  out << "# " << sub->get_name() << '\n' << sub->config_to_str(true, false);
}

// ---- shared option groups -------------------------------------------------

struct ModelFlags {
  int window = 90;
  int side = 32;
  model::FusionConfig model;
  std::string pipeline_config;

  void add(CLI::App* app) {
    app->add_option("--window", window, "Window length in frames")->capture_default_str();
    app->add_option("--side", side, "Model input side in pixels")->capture_default_str();
    app->add_option("--tubelet-t", model.tubelet_t, "Tubelet length in frames")->capture_default_str();
    app->add_option("--patch", model.patch, "Tubelet patch size")->capture_default_str();
    app->add_option("--embed-dim", model.embed_dim, "Token embedding width")->capture_default_str();
    app->add_option("--heads", model.heads, "Attention heads")->capture_default_str();
    app->add_option("--depth", model.depth, "Encoder blocks per branch")->capture_default_str();
    app->add_option("--ff-mult", model.ff_mult, "Feed-forward expansion")->capture_default_str();
    app->add_option("--imu-group", model.imu_group, "IMU timesteps per token")->capture_default_str();
    app->add_option("--feature-dim", model.feature_dim, "Per-branch feature width")->capture_default_str();
    app->add_option("--pipeline-config", pipeline_config, "Pipeline key = value document");
  }

  pipeline::PipelineConfig pipeline() const {
    pipeline::PipelineConfig pc =
        pipeline_config.empty() ? pipeline::PipelineConfig{}
                                : pipeline::PipelineConfig::from_document(KvDocument::load(pipeline_config));
    pc.window = window;
    pc.side = side;
    pc.validate();
    return pc;
  }

  model::FusionConfig fusion(std::uint64_t seed) const {
    model::FusionConfig c = model;
    c.window = window;
    c.side = side;
    c.seed = seed;
    c.validate();
    return c;
  }
};

model::BranchMask parse_ablation(const std::string& a) {
  if (a == "none") return {};
  if (a == "imu-only") return model::BranchMask::imu_only();
  if (a == "video-only") return model::BranchMask::video_only();
  throw ConfigError("--ablate must be none, imu-only or video-only, got '" + a + "'");
}

std::string ablation_name(const model::BranchMask& m) {
  if (m == model::BranchMask::imu_only()) return "imu-only";
  if (m == model::BranchMask::video_only()) return "video-only";
  return "none";
}

// ---- manifest --------------------------------------------------------------

struct ManifestEntry {
  std::string path;  // relative to the manifest directory
  pipeline::Split split = pipeline::Split::Train;
  std::string subject;
};

struct Manifest {
  fs::path dir;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
};

pipeline::Split parse_split(const std::string& s) {
  for (auto sp : {pipeline::Split::Train, pipeline::Split::Validation, pipeline::Split::Test})
    if (pipeline::to_string(sp) == s) return sp;
  throw ConfigError("unknown split '" + s + "'");
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot read " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("manifest: " + std::string(e.what()));
  }
  Manifest m;
  m.dir = path.parent_path();
  m.seed = j.value("seed", 0ULL);
  std::set<std::string> seen;
  for (const auto& r : j.at("recordings")) {
    ManifestEntry e{r.at("path").get<std::string>(), parse_split(r.at("split").get<std::string>()),
                    r.value("subject", "")};
    if (!seen.insert(fs::path(e.path).lexically_normal().string()).second)
      throw DataError("manifest: recording " + e.path + " assigned to more than one split");
    m.entries.push_back(e);
  }
  return m;
}

void warn_missing_classes(const std::map<pipeline::Split, std::set<ActionClass>>& present) {
  for (auto sp : {pipeline::Split::Train, pipeline::Split::Validation, pipeline::Split::Test}) {
    std::string missing;
    const auto it = present.find(sp);
    for (auto c : kAllActions)
      if (it == present.end() || !it->second.count(c)) missing += (missing.empty() ? "" : ",") + std::string(to_string(c));
    if (!missing.empty())
      std::cerr << "warning: " << pipeline::to_string(sp) << " split lacks classes: " << missing << '\n';
  }
}

struct SplitWindows {
  std::vector<pipeline::LabeledWindow> train, validation, test;
  std::vector<pipeline::LabeledWindow>& of(pipeline::Split s) {
    return s == pipeline::Split::Train ? train : s == pipeline::Split::Validation ? validation : test;
  }
};

SplitWindows load_windows(const Manifest& m, const pipeline::PipelineConfig& pc, std::set<pipeline::Split> wanted) {
  SplitWindows out;
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    if (!wanted.count(e.split)) continue;
    const auto rec = ingest::load_recording(m.dir / e.path);
    auto w = pipeline::extract_labeled_windows(rec, pc, static_cast<int>(i));
    auto& dst = out.of(e.split);
    for (auto& x : w) dst.push_back(std::move(x));
    if (verbosity > 0) info("loaded " + e.path + ": " + std::to_string(w.size()) + " windows");
  }
  return out;
}

std::vector<model::Example> examples(const std::vector<pipeline::LabeledWindow>& v) {
  std::vector<model::Example> e;
  e.reserve(v.size());
  for (const auto& w : v) e.push_back({&w.input, class_index(w.label)});
  return e;
}

// ---- subcommands -----------------------------------------------------------

struct SynthArgs {
  fs::path out;
  std::uint64_t seed = 1;
  int recordings = 10;
  double action_s = 15.0;
  double gap_s = 1.0;
  double style_spread = 1.0;
  long long jitter_us = 1000;
  double pixel_noise = 0.0;
  std::vector<std::string> scripts;
};

void run_synth(CLI::App* sub, const SynthArgs& a) {
  echo_config(sub, a.out);
  std::vector<synth::SynthScript> scripts;
  if (!a.scripts.empty()) {
    for (const auto& p : a.scripts) scripts.push_back(synth::SynthScript::parse(KvDocument::load(p)));
  } else {
    if (a.recordings < 1) throw ConfigError("--recordings must be >= 1");
    for (int r = 0; r < a.recordings; ++r) {
      auto s = synth::make_script(kAllActions, a.action_s, a.gap_s, a.seed * 1000 + static_cast<std::uint64_t>(r));
      s.hand = r % 2 ? Hand::Left : Hand::Right;
      s.subject = "subject_" + std::to_string(r / 2);
      s.style_spread = a.style_spread;
      s.jitter_us = a.jitter_us;
      s.pixel_noise = a.pixel_noise;
      s.validate();
      scripts.push_back(s);
    }
  }
  const auto splits = pipeline::assign_splits(scripts.size(), a.seed);
  json manifest = {{"seed", a.seed}, {"recordings", json::array()}};
  std::map<pipeline::Split, std::set<ActionClass>> present;
  std::array<int, 3> counts{};
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    std::ostringstream name;
    name << "recordings/rec_" << std::setw(3) << std::setfill('0') << i;
    const auto rec = synth::gen_recording(scripts[i]);
    ingest::save_recording(rec, a.out / name.str());
    {
      auto so = open_out(a.out / name.str() / "script.txt");
      so << scripts[i].to_document().serialize();
    }
    for (const auto& it : scripts[i].items) present[splits[i]].insert(it.cls);
    if (scripts[i].gap_s > 0.0) present[splits[i]].insert(ActionClass::Idle);
    ++counts[static_cast<std::size_t>(splits[i])];
    manifest["recordings"].push_back(
        {{"path", name.str()}, {"split", pipeline::to_string(splits[i])}, {"subject", scripts[i].subject}});
    info("generated " + name.str() + " (" + std::string(pipeline::to_string(splits[i])) + ")");
  }
  manifest["splits"] = {{"train", counts[0]}, {"validation", counts[1]}, {"test", counts[2]}};
  write_json(a.out / "manifest.json", manifest);
  warn_missing_classes(present);
}

struct TrainArgs {
  fs::path manifest, out, resume;
  std::uint64_t seed = 1;
  ModelFlags flags;
  model::TrainOptions opt;
  std::string optimizer = "momentum";
  std::string ablate = "none";
};

void run_train(CLI::App* sub, TrainArgs& a) {
  echo_config(sub, a.out);
  const auto pc0 = a.flags.pipeline();
  auto fc = a.flags.fusion(a.seed);
  if (a.optimizer == "adam") a.opt.optimizer = model::Optimizer::Adam;
  else if (a.optimizer != "momentum") throw ConfigError("--optimizer must be momentum or adam");
  a.opt.mask = parse_ablation(a.ablate);
  a.opt.seed = a.seed;

  std::optional<model::Checkpoint> prior;
  if (!a.resume.empty()) {
    prior = model::load_checkpoint(a.resume.string());
    if (!prior->state) throw DataError("resume: checkpoint has no training state");
    if (!(prior->model == fc)) throw ConfigError("resume: model flags differ from the checkpoint");
  }
  const auto m = load_manifest(a.manifest);
  auto w = load_windows(m, pc0, {pipeline::Split::Train, pipeline::Split::Validation});
  auto pc = pc0;
  pc.stats = prior ? prior->pipeline.stats : pipeline::compute_split_stats(w.train);
  pipeline::standardize_windows(w.train, pc.stats);
  pipeline::standardize_windows(w.validation, pc.stats);
  info("train windows " + std::to_string(w.train.size()) + ", validation " + std::to_string(w.validation.size()));

  model::FusionNet net(fc);
  const auto tr = examples(w.train), va = examples(w.validation);
  auto res = model::train(net, tr, va, a.opt, prior ? &*prior->state : nullptr, [](const model::EpochMetrics& e) {
    std::ostringstream s;
    s << "epoch " << e.epoch << " loss " << e.train_loss << " train_acc " << e.train_acc << " val_acc " << e.val_acc;
    info(s.str());
  });
  model::Checkpoint ck;
  ck.model = fc;
  ck.pipeline = pc;
  ck.mask = a.opt.mask;
  ck.params = res.best;
  ck.state = res.state;
  ck.info = {{"best_epoch", res.best_epoch}, {"ablate", ablation_name(a.opt.mask)}, {"seed", a.seed}};
  model::save_checkpoint((a.out / "checkpoint.bin").string(), ck);
  model::write_metrics_csv((a.out / "metrics.csv").string(), res.state.history);
}

struct EvalOfflineArgs {
  fs::path checkpoint, manifest, out;
  std::string split = "test";
  int window = 0, side = 0;
};

void run_eval_offline(CLI::App* sub, const EvalOfflineArgs& a) {
  echo_config(sub, a.out);
  const auto ck = model::load_checkpoint(a.checkpoint.string());
  if ((a.window && a.window != ck.model.window) || (a.side && a.side != ck.model.side) ||
      ck.pipeline.window != ck.model.window || ck.pipeline.side != ck.model.side)
    throw ConfigError("eval-offline: window/side do not match the checkpoint");
  const auto m = load_manifest(a.manifest);
  const auto sp = parse_split(a.split);
  auto w = load_windows(m, ck.pipeline, {sp});
  auto& set = w.of(sp);
  if (set.empty()) throw DataError("eval-offline: " + a.split + " split has no windows");
  pipeline::standardize_windows(set, ck.pipeline.stats);
  model::FusionNet net(ck.model);
  std::vector<ActionClass> pred(set.size());
#pragma omp parallel for schedule(dynamic, 2)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(set.size()); ++i)
    pred[static_cast<std::size_t>(i)] = net.predict(set[static_cast<std::size_t>(i)].input, ck.params, ck.mask).label;
  eval::Confusion cm;
  auto po = open_out(a.out / "predictions.csv");
  po << "recording,start_us,truth,predicted\n";
  for (std::size_t i = 0; i < set.size(); ++i) {
    cm.add(set[i].label, pred[i]);
    po << m.entries[static_cast<std::size_t>(set[i].recording)].path << ',' << set[i].start << ','
       << to_string(set[i].label) << ',' << to_string(pred[i]) << '\n';
  }
  {
    auto co = open_out(a.out / "confusion.csv");
    eval::write_confusion_csv(co, cm);
  }
  json per = json::object();
  const auto f1 = cm.f1();
  for (auto c : kAllActions)
    if (f1[static_cast<std::size_t>(class_index(c))]) per[std::string(to_string(c))] = *f1[static_cast<std::size_t>(class_index(c))];
  write_json(a.out / "offline_metrics.json", {{"split", a.split},
                                              {"windows", cm.total()},
                                              {"accuracy", cm.accuracy()},
                                              {"macro_f1", cm.macro_f1()},
                                              {"per_class_f1", per},
                                              {"ablate", ablation_name(ck.mask)}});
  std::cout << std::fixed << std::setprecision(4) << "accuracy " << cm.accuracy() << " macro_f1 " << cm.macro_f1()
            << " windows " << cm.total() << '\n';
}

struct EvalOnlineArgs {
  fs::path checkpoint, recording, out;
  bool oracle = false;
  bool include_warmup = false;
  ModelFlags flags;
};

void run_eval_online(CLI::App* sub, const EvalOnlineArgs& a) {
  echo_config(sub, a.out);
  const auto rec = ingest::load_recording(a.recording);
  if (!rec.labels) throw DataError("eval-online: recording has no ground truth");
  std::optional<model::Checkpoint> ck;
  std::unique_ptr<model::FusionNet> net;
  std::unique_ptr<runtime::WindowClassifier> cls;
  pipeline::PipelineConfig pc;
  std::string name = "Oracle";
  if (a.oracle) {
    pc = a.flags.pipeline();
    cls = std::make_unique<runtime::OracleClassifier>(*rec.labels);
  } else {
    if (a.checkpoint.empty()) throw ConfigError("eval-online: --checkpoint or --oracle required");
    ck = model::load_checkpoint(a.checkpoint.string());
    pc = ck->pipeline;
    net = std::make_unique<model::FusionNet>(ck->model);
    cls = std::make_unique<runtime::ModelClassifier>(*net, ck->params, ck->mask);
    const auto ab = ablation_name(ck->mask);
    name = ab == "none" ? "Multimodal" : ab == "imu-only" ? "IMU-only" : "Video-only";
  }
  const auto r = runtime::run_online(rec, pc, *cls, {a.include_warmup});
  std::vector<eval::NamedReport> rows{{name, r.report}};
  {
    auto o = open_out(a.out / "online_report.csv");
    eval::write_report_csv(o, rows);
  }
  {
    auto o = open_out(a.out / "online_report.txt");
    eval::write_report_text(o, rows);
  }
  {
    auto o = open_out(a.out / "frame_accuracy.csv");
    eval::write_frame_accuracy_csv(o, r.report.frames);
  }
  {
    auto o = open_out(a.out / "segments.jsonl");
    eval::write_segments_jsonl(o, r.segments);
  }
  {
    // Three rows per frame for timeline plots: ground truth, prediction, error category.
    auto o = open_out(a.out / "timeline.csv");
    o << "timestamp_us,gt,pred,warmup,category\n";
    std::size_t s = 0;
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
      const Micros t = r.grid[i];
      while (s < r.segments.size() && r.segments[s].end <= t) ++s;
      const bool scored = s < r.segments.size() && r.segments[s].start <= t;
      o << t << ',' << to_string(r.gt.entries()[i].label) << ',' << to_string(r.pred.entries()[i].label) << ','
        << (r.warmup[i] ? 1 : 0) << ',' << (scored ? eval::to_string(r.segments[s].category) : "") << '\n';
    }
  }
  write_json(a.out / "online_summary.json", {{"model", name},
                                             {"frames", r.grid.size()},
                                             {"windows", r.windows},
                                             {"frame_accuracy", r.report.frames.global},
                                             {"tp", r.report.percent(eval::Category::TP)},
                                             {"tn", r.report.percent(eval::Category::TN)},
                                             {"deletion", r.report.percent(eval::Category::Deletion)},
                                             {"dropped_no_imu", r.sync.dropped_no_imu},
                                             {"dropped_no_bottom", r.sync.dropped_no_bottom}});
  eval::write_report_text(std::cout, rows);
}

struct HrcArgs {
  fs::path checkpoint, trial_config, out;
  bool oracle = false;
  std::uint64_t seed = 1;
  int subjects = 0;
  int debounce = 0;
};

void run_hrc(CLI::App* sub, const HrcArgs& a) {
  echo_config(sub, a.out);
  hrc::TrialConfig tc = a.trial_config.empty() ? hrc::TrialConfig{}
                                               : hrc::TrialConfig::from_document(KvDocument::load(a.trial_config.string()));
  if (a.subjects > 0) tc.subjects = a.subjects;
  if (a.debounce > 0) tc.options.debounce = a.debounce;
  if (sub->count("--seed")) tc.options.seed = a.seed;
  std::optional<model::Checkpoint> ck;
  std::unique_ptr<model::FusionNet> net;
  if (!a.oracle) {
    if (a.checkpoint.empty()) throw ConfigError("hrc-sim: --checkpoint or --oracle required");
    ck = model::load_checkpoint(a.checkpoint.string());
    net = std::make_unique<model::FusionNet>(ck->model);
  }
  std::vector<hrc::TrialLog> logs;
  int failures = 0;
  auto trials = open_out(a.out / "trials.jsonl");
  for (int s = 0; s < tc.subjects; ++s) {
    std::mt19937_64 rng(tc.options.seed * 7919ULL + static_cast<std::uint64_t>(s));
    const auto schedule = tc.schedule_for(rng);
    const auto shapes = tc.shapes.empty() ? hrc::random_shape_order(rng) : tc.shapes;
    hrc::TrialOptions o = tc.options;
    o.seed = tc.options.seed * 1000ULL + static_cast<std::uint64_t>(s);
    std::unique_ptr<hrc::Recognizer> rec;
    if (a.oracle) {
      rec = std::make_unique<hrc::OracleRecognizer>(static_cast<std::size_t>(pipeline::PipelineConfig{}.window));
    } else {
      rec = std::make_unique<runtime::ModelRecognizer>(*net, ck->params, ck->pipeline, o.seed, ck->mask);
    }
    hrc::TrialLog log;
    try {
      log = hrc::closed_loop(*rec, schedule, shapes, o);
    } catch (const hrc::TrialError& e) {
      log = e.log();
      ++failures;
      std::cerr << "subject " << s << ": " << e.what() << '\n';
    }
    log.trial_id = "subject_" + std::to_string(s);
    hrc::write_trial_jsonl(trials, log);
    logs.push_back(std::move(log));
    info("subject " + std::to_string(s) + " done");
  }
  const auto st = hrc::latency_stats(logs);
  {
    auto o = open_out(a.out / "latency.csv");
    hrc::write_latency_csv(o, st);
  }
  {
    auto o = open_out(a.out / "latency_rows.csv");
    hrc::write_latency_rows(o, logs);
  }
  write_json(a.out / "hrc_summary.json", {{"recognizer", a.oracle ? "oracle" : "model"},
                                          {"subjects", tc.subjects},
                                          {"failures", failures},
                                          {"latencies", st.count},
                                          {"mean_s", st.mean},
                                          {"median_s", st.median},
                                          {"sd_s", st.sd},
                                          {"debounce", tc.options.debounce}});
  std::cout << std::fixed << std::setprecision(3) << "latencies " << st.count << " mean " << st.mean << " s median "
            << st.median << " s sd " << st.sd << " s failures " << failures << '\n';
}

struct ServeArgs {
  fs::path recording;
  std::string host = "127.0.0.1";
  int port = 7700;
  double speed = 1.0;
};

void run_serve(const ServeArgs& a) {
  if (a.port < 0 || a.port > 65535) throw ConfigError("--port out of range");
  auto rec = std::make_shared<const ingest::Recording>(ingest::load_recording(a.recording));
  ingest::StreamServer server({a.host, static_cast<std::uint16_t>(a.port)}, rec, {a.speed, 3});
  std::cout << "serving " << a.recording.string() << " on " << server.endpoint().str() << std::endl;
  server.wait();
  const auto sent = server.sent();
  std::cout << "sent imu " << sent[0] << " top " << sent[1] << " bottom " << sent[2] << '\n';
}

struct RecordArgs {
  std::string endpoint = "127.0.0.1:7700";
  fs::path out, meta_from;
};

void run_record(CLI::App* sub, const RecordArgs& a) {
  echo_config(sub, a.out);
  ingest::RecordingMeta meta;
  if (!a.meta_from.empty()) meta = ingest::load_recording(a.meta_from).meta;
  const auto n = ingest::record_from(ingest::Endpoint::parse(a.endpoint), a.out / "recording", meta);
  std::cout << "recorded imu " << n[0] << " top " << n[1] << " bottom " << n[2] << '\n';
}

struct ReplayArgs {
  fs::path recording, out;
  double speed = 1.0;
};

void run_replay(CLI::App* sub, const ReplayArgs& a) {
  echo_config(sub, a.out);
  const auto rec = ingest::load_recording(a.recording);
  ingest::RecordingWriter writer(a.out / "recording", rec.meta);
  std::mutex mu;
  auto sink = [&](const ingest::Packet& p) {
    std::lock_guard lk(mu);
    writer.append(p);
    return true;
  };
  const auto st = ingest::replay(rec, a.speed, {sink, sink, sink});
  if (rec.labels) writer.set_labels(*rec.labels);
  writer.close();
  json lateness = json::array();
  for (auto v : st.max_lateness_us) lateness.push_back(v);
  write_json(a.out / "replay_stats.json", {{"emitted", st.emitted}, {"max_lateness_us", lateness}, {"wall_seconds", st.wall_seconds}});
  std::cout << "replayed imu " << st.emitted[0] << " top " << st.emitted[1] << " bottom " << st.emitted[2] << " in "
            << st.wall_seconds << " s\n";
}

// ---- report ----------------------------------------------------------------

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

void print_table(std::ostream& out, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (w.size() <= i) w.push_back(0);
      w[i] = std::max(w[i], r[i].size());
    }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t i = 0; i < rows[k].size(); ++i)
      out << (i ? "  " : "") << std::left << std::setw(static_cast<int>(w[i])) << rows[k][i];
    out << '\n';
    if (k == 0) {
      std::size_t total = 0;
      for (auto x : w) total += x + 2;
      out << std::string(total > 2 ? total - 2 : total, '-') << '\n';
    }
  }
}

void run_report(const std::vector<std::string>& inputs) {
  for (const auto& p : inputs) {
    std::ifstream in(p);
    if (!in) throw DataError("report: cannot read " + p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    const bool jsonl = fs::path(p).extension() == ".jsonl";
    std::vector<std::string> keys;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (!jsonl) {
        rows.push_back(split_csv(line));
        continue;
      }
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw DataError("report: " + p + ": " + e.what());
      }
      if (keys.empty()) {
        for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
        rows.push_back(keys);
      }
      std::vector<std::string> r;
      for (const auto& k : keys) {
        if (!j.contains(k)) r.emplace_back("");
        else if (j[k].is_string()) r.push_back(j[k].get<std::string>());
        else r.push_back(j[k].dump());
      }
      rows.push_back(r);
    }
    std::cout << "== " << p << '\n';
    print_table(std::cout, rows);
    std::cout << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal human action recognition toolkit"};
  app.require_subcommand(1);
  bool quiet = false, verbose = false;
  app.add_flag("-q,--quiet", quiet, "Suppress progress messages");
  app.add_flag("-v,--verbose", verbose, "More progress messages");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth-dataset", "Generate synthetic recordings and a 60/20/20 split manifest");
  synth_cmd->add_option("--out", sa.out, "Output directory")->required();
  synth_cmd->add_option("--seed", sa.seed, "Dataset seed")->capture_default_str();
  synth_cmd->add_option("--recordings", sa.recordings, "Recordings to generate")->capture_default_str();
  synth_cmd->add_option("--action-s", sa.action_s, "Seconds per action")->capture_default_str();
  synth_cmd->add_option("--gap-s", sa.gap_s, "Idle pause between actions")->capture_default_str();
  synth_cmd->add_option("--style-spread", sa.style_spread, "Subject style jitter scale")->capture_default_str();
  synth_cmd->add_option("--jitter-us", sa.jitter_us, "Timestamp jitter")->capture_default_str();
  synth_cmd->add_option("--pixel-noise", sa.pixel_noise, "Camera noise std")->capture_default_str();
  synth_cmd->add_option("--script", sa.scripts, "Script documents (one recording each)");

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train the fusion classifier");
  train_cmd->add_option("--manifest", ta.manifest, "Dataset manifest")->required();
  train_cmd->add_option("--out", ta.out, "Run directory")->required();
  train_cmd->add_option("--seed", ta.seed, "Initialization and shuffling seed")->capture_default_str();
  train_cmd->add_option("--epochs", ta.opt.epochs, "Total epochs")->capture_default_str();
  train_cmd->add_option("--batch-size", ta.opt.batch_size, "Mini-batch size")->capture_default_str();
  train_cmd->add_option("--lr", ta.opt.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", ta.opt.momentum, "Momentum")->capture_default_str();
  train_cmd->add_option("--optimizer", ta.optimizer, "momentum or adam")->capture_default_str();
  train_cmd->add_option("--grad-clip", ta.opt.grad_clip, "Global gradient L2 clip (0 = off)")->capture_default_str();
  train_cmd->add_option("--max-steps", ta.opt.max_steps, "Step cap (0 = none)")->capture_default_str();
  train_cmd->add_option("--ablate", ta.ablate, "none, imu-only or video-only")->capture_default_str();
  train_cmd->add_option("--resume", ta.resume, "Continue from a checkpoint");
  ta.flags.add(train_cmd);

  EvalOfflineArgs eo;
  auto* eoff_cmd = app.add_subcommand("eval-offline", "Window accuracy, macro-F1 and confusion matrix");
  eoff_cmd->add_option("--checkpoint", eo.checkpoint, "Checkpoint file")->required();
  eoff_cmd->add_option("--manifest", eo.manifest, "Dataset manifest")->required();
  eoff_cmd->add_option("--out", eo.out, "Output directory")->required();
  eoff_cmd->add_option("--split", eo.split, "train, validation or test")->capture_default_str();
  eoff_cmd->add_option("--window", eo.window, "Expected window length");
  eoff_cmd->add_option("--side", eo.side, "Expected model side");

  EvalOnlineArgs en;
  auto* eon_cmd = app.add_subcommand("eval-online", "Stride-1 streaming evaluation with event metrics");
  eon_cmd->add_option("--checkpoint", en.checkpoint, "Checkpoint file");
  eon_cmd->add_flag("--oracle", en.oracle, "Use the ground-truth classifier");
  eon_cmd->add_option("--recording", en.recording, "Recording directory")->required();
  eon_cmd->add_option("--out", en.out, "Output directory")->required();
  eon_cmd->add_flag("--include-warmup", en.include_warmup, "Score frames before the first window");
  en.flags.add(eon_cmd);

  HrcArgs ha;
  auto* hrc_cmd = app.add_subcommand("hrc-sim", "Closed-loop trajectory switching trials");
  hrc_cmd->add_option("--checkpoint", ha.checkpoint, "Checkpoint file");
  hrc_cmd->add_flag("--oracle", ha.oracle, "Use the window-fill oracle recognizer");
  hrc_cmd->add_option("--trial-config", ha.trial_config, "Trial configuration document");
  hrc_cmd->add_option("--out", ha.out, "Output directory")->required();
  hrc_cmd->add_option("--seed", ha.seed, "Trial seed (overrides the config)");
  hrc_cmd->add_option("--subjects", ha.subjects, "Simulated subjects (overrides the config)");
  hrc_cmd->add_option("--debounce", ha.debounce, "Consecutive frames to trigger (overrides the config)");

  ServeArgs sv;
  auto* serve_cmd = app.add_subcommand("serve", "Stream a recording over TCP");
  serve_cmd->add_option("--recording", sv.recording, "Recording directory")->required();
  serve_cmd->add_option("--host", sv.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", sv.port, "Port (0 = any)")->capture_default_str();
  serve_cmd->add_option("--speed", sv.speed, "Pacing factor (0 = unpaced)")->capture_default_str();

  RecordArgs rc;
  auto* record_cmd = app.add_subcommand("record", "Record the three streams from a server");
  record_cmd->add_option("--endpoint", rc.endpoint, "host:port")->capture_default_str();
  record_cmd->add_option("--out", rc.out, "Output directory")->required();
  record_cmd->add_option("--meta-from", rc.meta_from, "Copy metadata from this recording");

  ReplayArgs rp;
  auto* replay_cmd = app.add_subcommand("replay", "Replay a recording at recorded pace into a new log");
  replay_cmd->add_option("--recording", rp.recording, "Recording directory")->required();
  replay_cmd->add_option("--out", rp.out, "Output directory")->required();
  replay_cmd->add_option("--speed", rp.speed, "Pacing factor (0 = unpaced)")->capture_default_str();

  std::vector<std::string> report_inputs;
  auto* report_cmd = app.add_subcommand("report", "Render CSV or JSONL outputs as text tables");
  report_cmd->add_option("inputs", report_inputs, "Files to render")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc_parse = app.exit(e);
    return rc_parse == 0 ? 0 : 2;
  }
  verbosity = quiet ? -1 : (verbose ? 1 : 0);

  try {
    if (*synth_cmd) run_synth(synth_cmd, sa);
    else if (*train_cmd) run_train(train_cmd, ta);
    else if (*eoff_cmd) run_eval_offline(eoff_cmd, eo);
    else if (*eon_cmd) run_eval_online(eon_cmd, en);
    else if (*hrc_cmd) run_hrc(hrc_cmd, ha);
    else if (*serve_cmd) run_serve(sv);
    else if (*record_cmd) run_record(record_cmd, rc);
    else if (*replay_cmd) run_replay(replay_cmd, rp);
    else if (*report_cmd) run_report(report_inputs);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::Data);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
