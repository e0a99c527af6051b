#include "flowcast/flow/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "flowcast/error.hpp"

namespace flowcast::flow {

using nlohmann::json;
using numerics::Shape;

namespace {

void put_le64(std::ofstream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

double get_le64(const unsigned char* bytes) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace

json flow_config_to_json(const FlowConfig& config) {
  return json{{"dim", config.dim},
              {"cond_dim", config.cond_dim},
              {"blocks", config.blocks},
              {"variant", std::string(to_string(config.variant))},
              {"seed", config.seed},
              {"nets",
               {{"conv_channels", config.nets.conv_channels},
                {"kernel", config.nets.kernel},
                {"dense_hidden", config.nets.dense_hidden}}}};
}

FlowConfig flow_config_from_json(const json& j) {
  FlowConfig c;
  c.dim = j.at("dim").get<std::size_t>();
  c.cond_dim = j.at("cond_dim").get<std::size_t>();
  c.blocks = j.at("blocks").get<std::size_t>();
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.seed = j.value("seed", std::uint64_t{0});
  const json& nets = j.at("nets");
  c.nets.conv_channels = nets.at("conv_channels").get<std::size_t>();
  c.nets.kernel = nets.at("kernel").get<std::size_t>();
  c.nets.dense_hidden = nets.at("dense_hidden").get<std::size_t>();
  return c;
}

void save_checkpoint(const FlowModel& model, const std::filesystem::path& dir,
                     const json& metadata) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());

  json tensors = json::array();
  std::size_t offset = 0;
  model.each_tensor([&](const std::string& name, const numerics::Array& a) {
    tensors.push_back({{"name", name}, {"shape", a.shape()}, {"offset", offset}});
    offset += a.size();
  });

  json manifest{{"format", "flowcast-checkpoint"},
                {"version", kCheckpointVersion},
                {"model", flow_config_to_json(model.config())},
                {"tensors", tensors},
                {"total_values", offset},
                {"metadata", metadata}};

  std::ofstream params(dir / "params.bin", std::ios::binary | std::ios::trunc);
  if (!params) throw InputError("cannot write " + (dir / "params.bin").string());
  model.each_tensor([&](const std::string&, const numerics::Array& a) {
    for (double v : a.values()) put_le64(params, v);
  });
  if (!params) throw InputError("failed writing " + (dir / "params.bin").string());

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw InputError("checkpoint manifest not found in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "flowcast-checkpoint") {
    throw InputError("not a flowcast checkpoint: " + dir.string());
  }
  if (manifest.value("version", 0) != kCheckpointVersion) {
    throw InputError("unsupported checkpoint version");
  }

  FlowConfig config;
  try {
    config = flow_config_from_json(manifest.at("model"));
  } catch (const json::exception& e) {
    throw InputError("bad checkpoint model section: " + std::string(e.what()));
  }
  FlowModel model(config);

  std::ifstream params(dir / "params.bin", std::ios::binary);
  if (!params) throw InputError("checkpoint parameters not found in " + dir.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(params)),
                                   std::istreambuf_iterator<char>());
  const std::size_t total = manifest.value("total_values", std::size_t{0});
  if (bytes.size() != total * 8) throw InputError("checkpoint parameter file has the wrong size");

  const json& tensors = manifest.at("tensors");
  std::size_t index = 0;
  model.visit(TensorVisitor([&](const std::string& name, numerics::Array& a) {
    if (index >= tensors.size() || tensors[index].at("name") != name ||
        tensors[index].at("shape").get<Shape>() != a.shape()) {
      throw InputError("checkpoint tensor table does not match the model at '" + name + "'");
    }
    const std::size_t offset = tensors[index].at("offset").get<std::size_t>();
    if ((offset + a.size()) * 8 > bytes.size()) throw InputError("checkpoint tensor out of range");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = get_le64(&bytes[(offset + i) * 8]);
    ++index;
  }));
  if (index != tensors.size()) throw InputError("checkpoint has tensors the model does not use");

  return {std::move(model), manifest.value("metadata", json::object())};
}

}  // namespace flowcast::flow
