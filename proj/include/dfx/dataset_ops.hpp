#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <tuple>
#include <vector>

#include "dfx/manifest.hpp"

namespace dfx::data {

// Maps a directory pattern (fnmatch syntax, matched against the path relative
// to the ingest root) to a class label and generator tag. A generator of
// "@dir" resolves to the file's immediate parent directory name.
struct LabelingRule {
  std::string pattern;
  ClassLabel label = ClassLabel::REAL;
  std::string generator;
};

std::vector<LabelingRule> parse_labeling_rules(const std::string& json_text);

struct IngestResult {
  Manifest manifest;
  std::vector<std::string> skipped;  // unreadable files, reported but not fatal
};

IngestResult ingest(const std::filesystem::path& root_dir,
                    const std::vector<LabelingRule>& rules);

// Stratified n-way split engine: per class, counts are assigned with the
// largest-remainder rule (ties toward the lower split index) and records are
// drawn by seeded shuffle. Outputs are path-sorted and pairwise disjoint.
std::vector<Manifest> stratified_split(const Manifest& m, const std::vector<double>& fractions,
                                       std::uint64_t seed);

// The 40/40/20 protocol split. Outputs carry splits BASE_TRAIN, HEAD_TRAIN,
// TEST in that order.
std::tuple<Manifest, Manifest, Manifest> split_three_way(const Manifest& m,
                                                         std::array<double, 3> fractions,
                                                         std::uint64_t seed);

// All records of `predominant` plus round(P*(1-ratio)/ratio) records sampled
// from the two remaining classes in equal halves (odd remainder goes to the
// class earlier in ClassLabel order). Output records carry the binary
// relabeling PREDOMINANT / OTHERS alongside their original label.
Manifest make_unbalanced_subset(const Manifest& m, ClassLabel predominant, double ratio,
                                std::uint64_t seed);

// Seeded per-class subsampling down to the smallest class count.
Manifest balance_eval_set(const Manifest& m, std::uint64_t seed);

// Re-encodes every image as baseline JPEG at each quality factor under
// out_dir/qf<QF>/, preserving path stems relative to the records' common
// ancestor directory. Returns one manifest per QF.
std::map<int, Manifest> jpeg_corpus(const Manifest& m, const std::vector<int>& qf_list,
                                    const std::filesystem::path& out_dir, unsigned threads = 0);

// Draws spec.fakes_total fakes divided equally (+-1) across fake generators
// and spec.reals_total reals across real sources, seeded by spec.seed.
Manifest assemble_generalization_set(const Manifest& pool, const GenBenchSpec& spec);

// Marks every record PREDOMINANT or OTHERS with respect to `predominant`.
Manifest binary_relabel(const Manifest& m, ClassLabel predominant);

// Stratified validation carve-out (by binary label when present, else by
// class). Returns (train, val).
std::pair<Manifest, Manifest> carve_validation(const Manifest& m, double fraction,
                                               std::uint64_t seed);

}  // namespace dfx::data
