#include "mmhar/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <map>

#include "mmhar/core/errors.hpp"

namespace mmhar::model {

namespace {

constexpr char kMagic[8] = {'M', 'M', 'H', 'R', 'C', 'K', 'P', 'T'};
static_assert(std::endian::native == std::endian::little, "checkpoint layout assumes a little-endian host");

nlohmann::json mask_json(const BranchMask& m) { return {{"top", m.top}, {"bottom", m.bottom}, {"imu", m.imu}}; }

nlohmann::json metrics_json(const std::vector<EpochMetrics>& ms) {
  auto a = nlohmann::json::array();
  for (const auto& m : ms)
    a.push_back({{"epoch", m.epoch}, {"train_loss", m.train_loss}, {"train_acc", m.train_acc},
                 {"val_acc", m.val_acc}, {"steps", m.steps}});
  return a;
}

std::vector<EpochMetrics> metrics_from(const nlohmann::json& a) {
  std::vector<EpochMetrics> out;
  for (const auto& j : a)
    out.push_back({j.at("epoch").get<int>(), j.at("train_loss").get<double>(), j.at("train_acc").get<double>(),
                   j.at("val_acc").get<double>(), j.at("steps").get<long>()});
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  std::vector<std::pair<std::string, std::span<const double>>> sections;
  sections.emplace_back("params", c.params.flat());
  nlohmann::json h;
  h["model"] = to_json(c.model);
  h["pipeline"] = c.pipeline.to_document().serialize();
  h["mask"] = mask_json(c.mask);
  h["info"] = c.info;
  if (c.state) {
    const auto& s = *c.state;
    h["state"] = {{"epoch", s.epoch},         {"step", s.step}, {"best_val", s.best_val},
                  {"best_epoch", s.best_epoch}, {"history", metrics_json(s.history)}};
    sections.emplace_back("state.params", s.params.flat());
    sections.emplace_back("state.best", s.best.flat());
    sections.emplace_back("state.m1", std::span<const double>(s.m1));
    sections.emplace_back("state.m2", std::span<const double>(s.m2));
  }
  auto list = nlohmann::json::array();
  for (const auto& [name, data] : sections) list.push_back({{"name", name}, {"count", data.size()}});
  h["sections"] = list;
  const std::string header = h.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof kMagic);
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t len = header.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [name, data] : sections)
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
  if (!out) throw DataError("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint: cannot open " + path);
  char magic[8];
  std::uint32_t version = 0;
  std::uint64_t len = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw DataError("checkpoint: " + path + " is not a checkpoint");
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint: version " + std::to_string(version) + " unsupported (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  if (len > (1u << 28)) throw DataError("checkpoint: header length out of range");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("checkpoint: truncated header");

  Checkpoint c;
  try {
    const auto h = nlohmann::json::parse(header);
    c.model = fusion_config_from_json(h.at("model"));
    c.pipeline = pipeline::PipelineConfig::from_document(KvDocument::parse(h.at("pipeline").get<std::string>()));
    const auto& m = h.at("mask");
    c.mask = {m.at("top").get<bool>(), m.at("bottom").get<bool>(), m.at("imu").get<bool>()};
    c.info = h.value("info", nlohmann::json::object());

    FusionNet net(c.model);
    auto layout = net.layout_ptr();
    std::map<std::string, std::vector<double>> data;
    for (const auto& s : h.at("sections")) {
      const auto count = s.at("count").get<std::size_t>();
      std::vector<double> v(count);
      in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
      if (!in) throw DataError("checkpoint: truncated section " + s.at("name").get<std::string>());
      data[s.at("name").get<std::string>()] = std::move(v);
    }
    if (!data.count("params")) throw DataError("checkpoint: missing params section");
    c.params = Params(layout, std::move(data["params"]));
    if (h.contains("state")) {
      const auto& sj = h.at("state");
      TrainState s;
      s.params = Params(layout, std::move(data.at("state.params")));
      s.best = Params(layout, std::move(data.at("state.best")));
      s.m1 = std::move(data.at("state.m1"));
      s.m2 = std::move(data.at("state.m2"));
      s.epoch = sj.at("epoch").get<int>();
      s.step = sj.at("step").get<long>();
      s.best_val = sj.at("best_val").get<double>();
      s.best_epoch = sj.at("best_epoch").get<int>();
      s.history = metrics_from(sj.at("history"));
      c.state = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw DataError(std::string("checkpoint: missing section: ") + e.what());
  }
  if (!c.params.all_finite()) throw NumericError("checkpoint: non-finite parameters in " + path);
  return c;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& metrics) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("metrics: cannot write " + path);
  out << "epoch,train_loss,train_acc,val_acc\n" << std::setprecision(10);
  for (const auto& m : metrics) out << m.epoch << ',' << m.train_loss << ',' << m.train_acc << ',' << m.val_acc << '\n';
}

}  // namespace mmhar::model
