#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dfx::data {

// Fixed total order REAL < GAN < DM; this is also the logit index order of
// the fusion classifier and the serialization order everywhere.
enum class ClassLabel : int { REAL = 0, GAN = 1, DM = 2 };

inline constexpr std::array<ClassLabel, 3> kAllClasses = {ClassLabel::REAL, ClassLabel::GAN,
                                                          ClassLabel::DM};
inline constexpr std::size_t kNumClasses = 3;

std::string to_string(ClassLabel c);
ClassLabel class_label_from_string(const std::string& s);

enum class Split : int { UNASSIGNED = 0, BASE_TRAIN = 1, HEAD_TRAIN = 2, TEST = 3 };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// Binary relabeling carried by unbalanced-subset records, alongside the
// original class label.
enum class BinaryLabel : int { NONE = 0, PREDOMINANT = 1, OTHERS = 2 };

struct ImageRecord {
  std::string path;
  ClassLabel label = ClassLabel::REAL;
  std::string generator;  // real images carry their source tag here
  Split split = Split::UNASSIGNED;
  int width = 0;
  int height = 0;
  BinaryLabel binary = BinaryLabel::NONE;

  bool operator==(const ImageRecord&) const = default;
};

// Ordered dataset ledger. Record order is deterministic given (inputs, seed);
// every constructing operation keeps records path-sorted.
struct Manifest {
  std::vector<ImageRecord> records;
  std::uint64_t seed = 0;
  std::string provenance;

  std::size_t size() const { return records.size(); }
  std::map<ClassLabel, std::size_t> count_by_class() const;
  std::map<std::string, std::size_t> count_by_generator() const;
  bool has_all_classes() const;
  void sort_by_path();
};

// JSONL with the v1 header line `#deepfeaturex-manifest v1 seed=<n>`,
// optionally followed by `#provenance <text>`. One record per line, keys in
// fixed order: path,label,generator,split,width,height[,binary].
std::string serialize_manifest(const Manifest& m);
Manifest parse_manifest(const std::string& text);

void save_manifest(const Manifest& m, const std::filesystem::path& p);
Manifest load_manifest(const std::filesystem::path& p);

struct GenBenchSpec {
  std::string name;
  std::vector<std::string> fake_generators;
  std::size_t fakes_total = 0;
  std::vector<std::string> real_sources;
  std::size_t reals_total = 0;
  std::uint64_t seed = 0;
};

std::string serialize_genbench_spec(const GenBenchSpec& s);
GenBenchSpec parse_genbench_spec(const std::string& json_text);
std::vector<GenBenchSpec> parse_genbench_specs(const std::string& json_text);
GenBenchSpec load_genbench_spec(const std::filesystem::path& p);
std::vector<GenBenchSpec> load_genbench_specs(const std::filesystem::path& p);

}  // namespace dfx::data
