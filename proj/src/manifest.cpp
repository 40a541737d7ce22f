#include "dfx/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dfx/error.hpp"
#include "dfx/util.hpp"

namespace dfx::data {

using ordered_json = nlohmann::ordered_json;

std::string to_string(ClassLabel c) {
  switch (c) {
    case ClassLabel::REAL: return "real";
    case ClassLabel::GAN: return "gan";
    case ClassLabel::DM: return "dm";
  }
  throw BadManifest("invalid class label value");
}

ClassLabel class_label_from_string(const std::string& s) {
  if (s == "real") return ClassLabel::REAL;
  if (s == "gan") return ClassLabel::GAN;
  if (s == "dm") return ClassLabel::DM;
  throw BadManifest("unknown class label '" + s + "'");
}

std::string to_string(Split s) {
  switch (s) {
    case Split::UNASSIGNED: return "unassigned";
    case Split::BASE_TRAIN: return "base_train";
    case Split::HEAD_TRAIN: return "head_train";
    case Split::TEST: return "test";
  }
  throw BadManifest("invalid split value");
}

Split split_from_string(const std::string& s) {
  if (s == "unassigned") return Split::UNASSIGNED;
  if (s == "base_train") return Split::BASE_TRAIN;
  if (s == "head_train") return Split::HEAD_TRAIN;
  if (s == "test") return Split::TEST;
  throw BadManifest("unknown split '" + s + "'");
}

std::map<ClassLabel, std::size_t> Manifest::count_by_class() const {
  std::map<ClassLabel, std::size_t> counts;
  for (auto c : kAllClasses) counts[c] = 0;
  for (const auto& r : records) counts[r.label]++;
  return counts;
}

std::map<std::string, std::size_t> Manifest::count_by_generator() const {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) counts[r.generator]++;
  return counts;
}

bool Manifest::has_all_classes() const {
  auto counts = count_by_class();
  for (auto c : kAllClasses)
    if (counts[c] == 0) return false;
  return true;
}

void Manifest::sort_by_path() {
  std::sort(records.begin(), records.end(),
            [](const ImageRecord& a, const ImageRecord& b) { return a.path < b.path; });
}

std::string serialize_manifest(const Manifest& m) {
  std::ostringstream out;
  out << "#deepfeaturex-manifest v1 seed=" << m.seed << "\n";
  if (!m.provenance.empty()) out << "#provenance " << m.provenance << "\n";
  for (const auto& r : m.records) {
    ordered_json j;
    j["path"] = r.path;
    j["label"] = to_string(r.label);
    j["generator"] = r.generator;
    j["split"] = to_string(r.split);
    j["width"] = r.width;
    j["height"] = r.height;
    if (r.binary != BinaryLabel::NONE)
      j["binary"] = r.binary == BinaryLabel::PREDOMINANT ? "predominant" : "others";
    out << j.dump() << "\n";
  }
  return out.str();
}

Manifest parse_manifest(const std::string& text) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  bool saw_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string header_prefix = "#deepfeaturex-manifest v1 seed=";
      const std::string prov_prefix = "#provenance ";
      if (line.rfind(header_prefix, 0) == 0) {
        m.seed = std::stoull(line.substr(header_prefix.size()));
        saw_header = true;
      } else if (line.rfind(prov_prefix, 0) == 0) {
        m.provenance = line.substr(prov_prefix.size());
      }
      continue;
    }
    if (!saw_header) throw BadManifest("missing #deepfeaturex-manifest v1 header line");
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw BadManifest("line " + std::to_string(lineno) + ": " + e.what());
    }
    ImageRecord r;
    try {
      r.path = j.at("path").get<std::string>();
      r.label = class_label_from_string(j.at("label").get<std::string>());
      r.generator = j.at("generator").get<std::string>();
      r.split = split_from_string(j.at("split").get<std::string>());
      r.width = j.at("width").get<int>();
      r.height = j.at("height").get<int>();
      if (j.contains("binary")) {
        auto b = j.at("binary").get<std::string>();
        if (b == "predominant")
          r.binary = BinaryLabel::PREDOMINANT;
        else if (b == "others")
          r.binary = BinaryLabel::OTHERS;
        else
          throw BadManifest("unknown binary label '" + b + "'");
      }
    } catch (const ordered_json::exception& e) {
      throw BadManifest("line " + std::to_string(lineno) + ": " + e.what());
    }
    m.records.push_back(std::move(r));
  }
  if (!saw_header) throw BadManifest("missing #deepfeaturex-manifest v1 header line");
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& p) {
  util::write_text_file(p, serialize_manifest(m));
}

Manifest load_manifest(const std::filesystem::path& p) {
  return parse_manifest(util::read_text_file(p));
}

static GenBenchSpec spec_from_json(const ordered_json& j) {
  GenBenchSpec s;
  s.name = j.at("name").get<std::string>();
  s.fake_generators = j.at("fake_generators").get<std::vector<std::string>>();
  s.fakes_total = j.at("fakes_total").get<std::size_t>();
  s.real_sources = j.at("real_sources").get<std::vector<std::string>>();
  s.reals_total = j.at("reals_total").get<std::size_t>();
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

std::string serialize_genbench_spec(const GenBenchSpec& s) {
  ordered_json j;
  j["name"] = s.name;
  j["fake_generators"] = s.fake_generators;
  j["fakes_total"] = s.fakes_total;
  j["real_sources"] = s.real_sources;
  j["reals_total"] = s.reals_total;
  j["seed"] = s.seed;
  return j.dump(2) + "\n";
}

GenBenchSpec parse_genbench_spec(const std::string& json_text) {
  try {
    return spec_from_json(ordered_json::parse(json_text));
  } catch (const ordered_json::exception& e) {
    throw BadManifest(std::string("bad genbench spec: ") + e.what());
  }
}

std::vector<GenBenchSpec> parse_genbench_specs(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const ordered_json::exception& e) {
    throw BadManifest(std::string("bad genbench spec: ") + e.what());
  }
  std::vector<GenBenchSpec> out;
  try {
    if (j.is_array())
      for (const auto& item : j) out.push_back(spec_from_json(item));
    else
      out.push_back(spec_from_json(j));
  } catch (const ordered_json::exception& e) {
    throw BadManifest(std::string("bad genbench spec: ") + e.what());
  }
  return out;
}

GenBenchSpec load_genbench_spec(const std::filesystem::path& p) {
  return parse_genbench_spec(util::read_text_file(p));
}

std::vector<GenBenchSpec> load_genbench_specs(const std::filesystem::path& p) {
  return parse_genbench_specs(util::read_text_file(p));
}

}  // namespace dfx::data
