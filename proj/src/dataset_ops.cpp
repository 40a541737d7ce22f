#include "dfx/dataset_ops.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "dfx/error.hpp"
#include "dfx/image.hpp"
#include "dfx/rng.hpp"
#include "dfx/util.hpp"

namespace dfx::data {

namespace {

// Largest-remainder apportionment of n into buckets proportional to
// fractions; ties broken toward the lower bucket index. Sums to n exactly.
std::vector<std::size_t> largest_remainder(std::size_t n, const std::vector<double>& fractions) {
  const std::size_t k = fractions.size();
  std::vector<std::size_t> counts(k);
  std::vector<double> remainders(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    double target = static_cast<double>(n) * fractions[i];
    counts[i] = static_cast<std::size_t>(std::floor(target));
    remainders[i] = target - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) counts[order[i % k]]++;
  return counts;
}

std::vector<std::size_t> indices_of_class(const Manifest& m, ClassLabel c) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].label == c) idx.push_back(i);
  return idx;
}

void require_all_classes(const Manifest& m) {
  auto counts = m.count_by_class();
  for (auto c : kAllClasses)
    if (counts[c] == 0) throw MissingClass("no records of class '" + to_string(c) + "'");
}

bool has_image_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

// Deepest directory shared by all paths; used to derive relative stems.
std::filesystem::path common_ancestor(const std::vector<ImageRecord>& records) {
  if (records.empty()) return {};
  std::filesystem::path common = std::filesystem::path(records[0].path).parent_path();
  for (const auto& r : records) {
    std::filesystem::path dir = std::filesystem::path(r.path).parent_path();
    std::filesystem::path next;
    auto a = common.begin();
    auto b = dir.begin();
    while (a != common.end() && b != dir.end() && *a == *b) next /= *a, ++a, ++b;
    common = next;
    if (common.empty()) break;
  }
  return common;
}

}  // namespace

std::vector<LabelingRule> parse_labeling_rules(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw BadManifest(std::string("bad labeling rules: ") + e.what());
  }
  if (!j.is_array()) throw BadManifest("labeling rules must be a JSON array");
  std::vector<LabelingRule> rules;
  for (const auto& item : j) {
    LabelingRule r;
    r.pattern = item.at("pattern").get<std::string>();
    r.label = class_label_from_string(item.at("label").get<std::string>());
    r.generator = item.at("generator").get<std::string>();
    rules.push_back(std::move(r));
  }
  return rules;
}

IngestResult ingest(const std::filesystem::path& root_dir,
                    const std::vector<LabelingRule>& rules) {
  if (!std::filesystem::is_directory(root_dir))
    throw IoFailure("ingest root is not a readable directory: " + root_dir.string());

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root_dir))
    if (entry.is_regular_file() && has_image_extension(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  IngestResult out;
  for (const auto& file : files) {
    std::string rel = std::filesystem::relative(file, root_dir).generic_string();
    const LabelingRule* matched = nullptr;
    for (const auto& rule : rules)
      if (::fnmatch(rule.pattern.c_str(), rel.c_str(), 0) == 0) {
        matched = &rule;
        break;
      }
    if (!matched) continue;
    ImageRecord r;
    r.path = file.string();
    r.label = matched->label;
    r.generator = matched->generator == "@dir" ? file.parent_path().filename().string()
                                               : matched->generator;
    if (r.generator.empty()) throw BadManifest("empty generator tag for " + rel);
    r.split = Split::UNASSIGNED;
    try {
      auto [w, h] = probe_dimensions(file);
      r.width = w;
      r.height = h;
    } catch (const UnreadableImage&) {
      out.skipped.push_back(file.string());
      continue;
    }
    out.manifest.records.push_back(std::move(r));
  }
  if (out.manifest.records.empty())
    throw EmptyCorpus("no readable images matched under " + root_dir.string());
  out.manifest.provenance =
      "ingest root=" + root_dir.string() + " skipped=" + std::to_string(out.skipped.size());
  return out;
}

std::vector<Manifest> stratified_split(const Manifest& m, const std::vector<double>& fractions,
                                       std::uint64_t seed) {
  if (fractions.size() < 2) throw BadFractions("need at least two fractions");
  double sum = 0.0;
  for (double f : fractions) {
    if (f <= 0.0) throw BadFractions("fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw BadFractions("fractions sum to " + std::to_string(sum) + ", expected 1");

  auto class_counts = m.count_by_class();
  for (auto c : kAllClasses)
    if (class_counts[c] > 0 && class_counts[c] < fractions.size())
      throw TooFewRecords("class '" + to_string(c) + "' has " +
                          std::to_string(class_counts[c]) + " records, need >= " +
                          std::to_string(fractions.size()));

  std::vector<Manifest> outputs(fractions.size());
  Rng rng(Rng::derive(seed, "stratified_split"));
  for (auto c : kAllClasses) {
    auto idx = indices_of_class(m, c);
    if (idx.empty()) continue;
    rng.shuffle(idx);
    auto counts = largest_remainder(idx.size(), fractions);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < fractions.size(); ++s)
      for (std::size_t i = 0; i < counts[s]; ++i)
        outputs[s].records.push_back(m.records[idx[pos++]]);
  }
  for (std::size_t s = 0; s < outputs.size(); ++s) {
    outputs[s].sort_by_path();
    outputs[s].seed = seed;
    std::ostringstream prov;
    prov << "stratified_split part=" << s + 1 << "/" << outputs.size() << " fractions=";
    for (std::size_t i = 0; i < fractions.size(); ++i) prov << (i ? "," : "") << fractions[i];
    prov << " seed=" << seed;
    outputs[s].provenance = prov.str();
  }
  return outputs;
}

std::tuple<Manifest, Manifest, Manifest> split_three_way(const Manifest& m,
                                                         std::array<double, 3> fractions,
                                                         std::uint64_t seed) {
  auto counts = m.count_by_class();
  for (auto c : kAllClasses)
    if (counts[c] > 0 && counts[c] < 3)
      throw TooFewRecords("class '" + to_string(c) + "' needs >= 3 records");
  auto parts = stratified_split(m, {fractions[0], fractions[1], fractions[2]}, seed);
  const Split roles[3] = {Split::BASE_TRAIN, Split::HEAD_TRAIN, Split::TEST};
  for (int s = 0; s < 3; ++s)
    for (auto& r : parts[s].records) r.split = roles[s];
  return {std::move(parts[0]), std::move(parts[1]), std::move(parts[2])};
}

Manifest make_unbalanced_subset(const Manifest& m, ClassLabel predominant, double ratio,
                                std::uint64_t seed) {
  if (ratio <= 0.0 || ratio >= 1.0) throw BadFractions("unbalance ratio must be in (0,1)");
  require_all_classes(m);

  auto pred_idx = indices_of_class(m, predominant);
  const std::size_t pred_count = pred_idx.size();
  const std::size_t others_needed = static_cast<std::size_t>(
      std::llround(static_cast<double>(pred_count) * (1.0 - ratio) / ratio));

  std::vector<ClassLabel> remaining;
  for (auto c : kAllClasses)
    if (c != predominant) remaining.push_back(c);  // already in ClassLabel order

  // Equal halves; odd remainder goes to the class earlier in ClassLabel order.
  std::array<std::size_t, 2> quotas = {(others_needed + 1) / 2, others_needed / 2};
  std::array<std::vector<std::size_t>, 2> avail = {indices_of_class(m, remaining[0]),
                                                   indices_of_class(m, remaining[1])};
  std::size_t total_avail = avail[0].size() + avail[1].size();
  for (int i = 0; i < 2; ++i)
    if (avail[i].size() < quotas[i])
      throw InsufficientOthers("class '" + to_string(remaining[i]) + "' has " +
                               std::to_string(avail[i].size()) + " records for a quota of " +
                               std::to_string(quotas[i]) + " (need " +
                               std::to_string(others_needed) + " total, have " +
                               std::to_string(total_avail) + ")");

  Manifest out;
  for (auto i : pred_idx) {
    out.records.push_back(m.records[i]);
    out.records.back().binary = BinaryLabel::PREDOMINANT;
  }
  Rng rng(Rng::derive(seed, "unbalanced_" + to_string(predominant)));
  for (int i = 0; i < 2; ++i) {
    auto picks = rng.sample_indices(avail[i].size(), quotas[i]);
    std::sort(picks.begin(), picks.end());
    for (auto p : picks) {
      out.records.push_back(m.records[avail[i][p]]);
      out.records.back().binary = BinaryLabel::OTHERS;
    }
  }
  out.sort_by_path();
  out.seed = seed;
  std::ostringstream prov;
  prov << "make_unbalanced_subset predominant=" << to_string(predominant) << " ratio=" << ratio
       << " seed=" << seed << " others_may_reuse_pool=true";
  out.provenance = prov.str();
  return out;
}

Manifest balance_eval_set(const Manifest& m, std::uint64_t seed) {
  require_all_classes(m);
  auto counts = m.count_by_class();
  std::size_t n = SIZE_MAX;
  for (auto c : kAllClasses) n = std::min(n, counts[c]);

  Manifest out;
  Rng rng(Rng::derive(seed, "balance_eval_set"));
  for (auto c : kAllClasses) {
    auto idx = indices_of_class(m, c);
    auto picks = rng.sample_indices(idx.size(), n);
    std::sort(picks.begin(), picks.end());
    for (auto p : picks) out.records.push_back(m.records[idx[p]]);
  }
  out.sort_by_path();
  out.seed = seed;
  out.provenance = "balance_eval_set per_class=" + std::to_string(n) + " seed=" +
                   std::to_string(seed);
  return out;
}

std::map<int, Manifest> jpeg_corpus(const Manifest& m, const std::vector<int>& qf_list,
                                    const std::filesystem::path& out_dir, unsigned threads) {
  if (qf_list.empty()) throw BadFractions("qf_list is empty");
  for (int qf : qf_list)
    if (qf < 1 || qf > 100)
      throw BadFractions("quality factor " + std::to_string(qf) + " outside [1,100]");
  if (m.records.empty()) throw EmptyCorpus("jpeg_corpus on empty manifest");

  const std::filesystem::path base = common_ancestor(m.records);

  // Relative output stems must be unique once extensions collapse to .jpg.
  std::set<std::string> stems;
  std::vector<std::filesystem::path> rel_stems;
  rel_stems.reserve(m.records.size());
  for (const auto& r : m.records) {
    std::filesystem::path rel = std::filesystem::relative(r.path, base);
    rel.replace_extension(".jpg");
    auto key = rel.generic_string();
    if (!stems.insert(key).second)
      throw EncodeFailure("output stem collision: " + key);
    rel_stems.push_back(rel);
  }

  std::map<int, Manifest> out;
  for (int qf : qf_list) {
    const std::filesystem::path qf_dir = out_dir / ("qf" + std::to_string(qf));
    std::vector<std::size_t> order(m.records.size());
    std::iota(order.begin(), order.end(), 0);
    auto encoded = util::parallel_map<std::size_t, ImageRecord>(
        order,
        [&](const std::size_t& i) {
          const auto& r = m.records[i];
          Image img = load_image(r.path);
          std::filesystem::path dst = qf_dir / rel_stems[i];
          save_jpeg(img, dst, qf);
          ImageRecord nr = r;
          nr.path = dst.string();
          nr.width = img.width;
          nr.height = img.height;
          return nr;
        },
        threads);
    Manifest qm;
    qm.records = std::move(encoded);
    qm.sort_by_path();
    qm.seed = m.seed;
    qm.provenance = "jpeg_corpus qf=" + std::to_string(qf) + " n=" +
                    std::to_string(qm.records.size());
    out.emplace(qf, std::move(qm));
  }
  return out;
}

Manifest assemble_generalization_set(const Manifest& pool, const GenBenchSpec& spec) {
  if (spec.fake_generators.empty() || spec.real_sources.empty())
    throw BadManifest("genbench spec '" + spec.name + "' needs fake generators and real sources");

  auto equal_quotas = [](std::size_t total, std::size_t k) {
    std::vector<std::size_t> q(k, total / k);
    for (std::size_t i = 0; i < total % k; ++i) q[i]++;
    return q;
  };

  Manifest out;
  Rng rng(Rng::derive(spec.seed, "genbench_" + spec.name));

  auto draw = [&](const std::string& tag, bool want_real, std::size_t quota) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < pool.records.size(); ++i) {
      const auto& r = pool.records[i];
      bool is_real = r.label == ClassLabel::REAL;
      if (is_real == want_real && r.generator == tag) candidates.push_back(i);
    }
    if (candidates.size() < quota)
      throw InsufficientPool("tag '" + tag + "': need " + std::to_string(quota) + ", have " +
                             std::to_string(candidates.size()));
    auto picks = rng.sample_indices(candidates.size(), quota);
    std::sort(picks.begin(), picks.end());
    for (auto p : picks) out.records.push_back(pool.records[candidates[p]]);
  };

  auto fake_quotas = equal_quotas(spec.fakes_total, spec.fake_generators.size());
  for (std::size_t i = 0; i < spec.fake_generators.size(); ++i)
    draw(spec.fake_generators[i], false, fake_quotas[i]);
  auto real_quotas = equal_quotas(spec.reals_total, spec.real_sources.size());
  for (std::size_t i = 0; i < spec.real_sources.size(); ++i)
    draw(spec.real_sources[i], true, real_quotas[i]);

  out.sort_by_path();
  out.seed = spec.seed;
  out.provenance = "assemble_generalization_set name=" + spec.name + " seed=" +
                   std::to_string(spec.seed);
  return out;
}

Manifest binary_relabel(const Manifest& m, ClassLabel predominant) {
  Manifest out = m;
  for (auto& r : out.records)
    r.binary = r.label == predominant ? BinaryLabel::PREDOMINANT : BinaryLabel::OTHERS;
  out.provenance = "binary_relabel predominant=" + to_string(predominant) +
                   (m.provenance.empty() ? "" : " | " + m.provenance);
  return out;
}

std::pair<Manifest, Manifest> carve_validation(const Manifest& m, double fraction,
                                               std::uint64_t seed) {
  if (fraction <= 0.0 || fraction >= 1.0) throw BadFractions("val fraction must be in (0,1)");

  bool use_binary = std::any_of(m.records.begin(), m.records.end(),
                                [](const ImageRecord& r) { return r.binary != BinaryLabel::NONE; });
  auto group_of = [&](const ImageRecord& r) {
    return use_binary ? static_cast<int>(r.binary) : static_cast<int>(r.label);
  };

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < m.records.size(); ++i) groups[group_of(m.records[i])].push_back(i);

  Manifest train, val;
  Rng rng(Rng::derive(seed, "carve_validation"));
  for (auto& [g, idx] : groups) {
    std::size_t n_val = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(idx.size())));
    if (idx.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, idx.size() - 1);
    else n_val = 0;
    auto shuffled = idx;
    rng.shuffle(shuffled);
    for (std::size_t i = 0; i < shuffled.size(); ++i)
      (i < n_val ? val : train).records.push_back(m.records[shuffled[i]]);
  }
  train.sort_by_path();
  val.sort_by_path();
  train.seed = val.seed = seed;
  train.provenance = "carve_validation part=train fraction=" + std::to_string(fraction);
  val.provenance = "carve_validation part=val fraction=" + std::to_string(fraction);
  return {std::move(train), std::move(val)};
}

}  // namespace dfx::data
