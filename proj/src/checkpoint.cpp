#include "dfx/checkpoint.hpp"

#include <cstring>

#include <nlohmann/json.hpp>

#include "dfx/error.hpp"
#include "dfx/util.hpp"

namespace dfx::nn {

namespace {

constexpr char kMagic[8] = {'D', 'F', 'X', 'C', 'K', 'P', 'T', '1'};

void append_f32_le(std::vector<std::uint8_t>& out, double v) {
  float f = static_cast<float>(v);
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  out.push_back(static_cast<std::uint8_t>(bits & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xff));
}

double read_f32_le(const std::uint8_t* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  float f;
  std::memcpy(&f, &bits, 4);
  return static_cast<double>(f);
}

}  // namespace

std::vector<std::uint8_t> parameter_payload(const std::vector<Parameter>& params) {
  std::vector<std::uint8_t> payload;
  std::size_t total = 0;
  for (const auto& p : params) total += p.tensor().size();
  payload.reserve(total * 4);
  for (const auto& p : params)
    for (double v : p.tensor().values()) append_f32_le(payload, v);
  return payload;
}

std::string parameter_digest(const std::vector<Parameter>& params) {
  return util::sha256_hex(parameter_payload(params));
}

void save_checkpoint(const std::filesystem::path& p, const std::vector<Parameter>& params) {
  std::vector<std::uint8_t> payload = parameter_payload(params);

  nlohmann::ordered_json header;
  header["version"] = 1;
  header["digest"] = util::sha256_hex(payload);
  auto& plist = header["params"] = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const auto& param : params) {
    nlohmann::ordered_json j;
    j["name"] = param.name();
    j["shape"] = param.tensor().shape();
    j["frozen"] = param.frozen();
    j["offset"] = offset;
    j["nbytes"] = param.tensor().size() * 4;
    offset += param.tensor().size() * 4;
    plist.push_back(std::move(j));
  }
  const std::string header_str = header.dump();

  std::vector<std::uint8_t> file;
  file.reserve(8 + 4 + header_str.size() + payload.size());
  file.insert(file.end(), kMagic, kMagic + 8);
  const std::uint32_t hlen = static_cast<std::uint32_t>(header_str.size());
  for (int i = 0; i < 4; ++i) file.push_back(static_cast<std::uint8_t>((hlen >> (8 * i)) & 0xff));
  file.insert(file.end(), header_str.begin(), header_str.end());
  file.insert(file.end(), payload.begin(), payload.end());
  util::write_binary_file(p, file.data(), file.size());
}

std::vector<Parameter> load_checkpoint(const std::filesystem::path& p) {
  std::vector<std::uint8_t> file = util::read_binary_file(p);
  if (file.size() < 12 || std::memcmp(file.data(), kMagic, 8) != 0)
    throw BadCheckpoint(p.string() + ": missing DFXCKPT1 magic");
  std::uint32_t hlen = 0;
  for (int i = 0; i < 4; ++i) hlen |= static_cast<std::uint32_t>(file[8 + i]) << (8 * i);
  if (file.size() < 12 + static_cast<std::size_t>(hlen))
    throw BadCheckpoint(p.string() + ": truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(file.begin() + 12, file.begin() + 12 + hlen);
  } catch (const nlohmann::json::exception& e) {
    throw BadCheckpoint(p.string() + ": bad header: " + e.what());
  }
  const std::uint8_t* payload = file.data() + 12 + hlen;
  const std::size_t payload_len = file.size() - 12 - hlen;
  const std::string digest = util::sha256_hex(payload, payload_len);
  if (header.value("digest", "") != digest)
    throw BadCheckpoint(p.string() + ": payload digest mismatch");

  std::vector<Parameter> params;
  for (const auto& j : header.at("params")) {
    const std::string name = j.at("name").get<std::string>();
    const auto shape = j.at("shape").get<std::vector<std::size_t>>();
    const bool frozen = j.at("frozen").get<bool>();
    const std::size_t offset = j.at("offset").get<std::size_t>();
    const std::size_t nbytes = j.at("nbytes").get<std::size_t>();
    if (offset + nbytes > payload_len)
      throw BadCheckpoint(p.string() + ": parameter '" + name + "' extends past payload");
    if (nbytes != Tensor::shape_size(shape) * 4)
      throw BadCheckpoint(p.string() + ": parameter '" + name + "' size/shape mismatch");
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = read_f32_le(payload + offset + 4 * i);
    params.emplace_back(name, std::move(t), frozen);
  }
  return params;
}

void quantize_to_f32(std::vector<Parameter>& params) {
  for (auto& p : params)
    for (auto& v : p.tensor().values()) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace dfx::nn
