#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "tkre/ensemble.hpp"
#include "tkre/error.hpp"
#include "tkre/version.hpp"

namespace tkre {

// Model container layout (see docs/model_format.md):
//   8 bytes   magic "TKREMODL"
//   u32 LE    format version
//   u64 LE    header length H
//   H bytes   header JSON
//   payload   f64 LE arrays: standardizer means, standardizer stdevs, then
//             per learner the standardized sub-matrix (row-major) and its
//             target vector.

namespace detail {

inline constexpr char kModelMagic[8] = {'T', 'K', 'R', 'E', 'M', 'O', 'D', 'L'};

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& data, std::size_t offset) : data_(data), pos_(offset) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> f64_array(std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = f64();
    return out;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw FormatError("model file truncated");
  }
  const std::string& data_;
  std::size_t pos_;
};

inline nlohmann::json k_policy_to_json(const KPolicy& p) {
  nlohmann::json j;
  switch (p.kind) {
    case KPolicy::Kind::kFixed:
      j["kind"] = "fixed";
      j["fixed_k"] = p.fixed_k;
      break;
    case KPolicy::Kind::kUniformRandom:
      j["kind"] = "uniform";
      j["k_min"] = p.k_min;
      j["k_max"] = p.k_max;
      break;
    case KPolicy::Kind::kTuned:
      j["kind"] = "tuned";
      j["tune_candidates"] = p.tune_candidates;
      j["tune_folds"] = p.tune_folds;
      break;
  }
  return j;
}

inline KPolicy k_policy_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "fixed") return KPolicy::fixed(j.at("fixed_k").get<std::size_t>());
  if (kind == "uniform")
    return KPolicy::uniform(j.at("k_min").get<std::size_t>(), j.at("k_max").get<std::size_t>());
  if (kind == "tuned") {
    KPolicy p = KPolicy::tuned();
    p.tune_candidates = j.at("tune_candidates").get<std::vector<std::size_t>>();
    p.tune_folds = j.at("tune_folds").get<std::size_t>();
    return p;
  }
  throw FormatError("model header: unknown k policy kind '" + kind + "'");
}

}  // namespace detail

inline void save_model(const EnsembleModel& model, const std::string& path) {
  nlohmann::json header;
  header["format_version"] = kModelFormatVersion;
  header["library_version"] = kVersion;
  header["seed"] = model.seed;
  header["target_name"] = model.target_name;
  header["feature_names"] = model.feature_names;
  header["spec"] = {{"variant_name", model.spec.variant_name},
                    {"obs_fraction", model.spec.obs_fraction},
                    {"feat_fraction", model.spec.feat_fraction},
                    {"n_learners", model.spec.n_learners},
                    {"sample_with_replacement", model.spec.sample_with_replacement},
                    {"k_policy", detail::k_policy_to_json(model.spec.k_policy)}};
  if (model.tuned_k) header["tuned_k"] = *model.tuned_k;
  header["standardizer_constant"] = model.standardizer.is_constant;
  nlohmann::json learners = nlohmann::json::array();
  for (const Learner& learner : model.learners) {
    learners.push_back({{"rows", learner.bag.row_indices},
                        {"features", learner.bag.feature_indices},
                        {"k_drawn", learner.bag.k_drawn},
                        {"k", learner.bag.k}});
  }
  header["learners"] = std::move(learners);
  const std::string header_text = header.dump();

  std::string blob;
  blob.append(detail::kModelMagic, sizeof detail::kModelMagic);
  detail::put_u32(blob, static_cast<std::uint32_t>(kModelFormatVersion));
  detail::put_u64(blob, header_text.size());
  blob += header_text;
  for (double v : model.standardizer.means) detail::put_f64(blob, v);
  for (double v : model.standardizer.stdevs) detail::put_f64(blob, v);
  for (const Learner& learner : model.learners) {
    for (double v : learner.regressor.index().points().values()) detail::put_f64(blob, v);
    for (double v : learner.regressor.targets()) detail::put_f64(blob, v);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw DataError("model write failed: " + path);
}

inline EnsembleModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < sizeof detail::kModelMagic ||
      std::memcmp(blob.data(), detail::kModelMagic, sizeof detail::kModelMagic) != 0)
    throw FormatError("not a model file (bad magic): " + path);
  detail::ByteReader reader(blob, sizeof detail::kModelMagic);
  const std::uint32_t version = reader.u32();
  if (version != static_cast<std::uint32_t>(kModelFormatVersion))
    throw FormatError("unsupported model format version " + std::to_string(version));
  const std::uint64_t header_len = reader.u64();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(reader.bytes(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model header is not valid JSON: ") + e.what());
  }

  try {
    EnsembleModel model;
    model.seed = header.at("seed").get<std::uint64_t>();
    model.target_name = header.at("target_name").get<std::string>();
    model.feature_names = header.at("feature_names").get<std::vector<std::string>>();
    const auto& spec_json = header.at("spec");
    model.spec.variant_name = spec_json.at("variant_name").get<std::string>();
    model.spec.obs_fraction = spec_json.at("obs_fraction").get<double>();
    model.spec.feat_fraction = spec_json.at("feat_fraction").get<double>();
    model.spec.n_learners = spec_json.at("n_learners").get<std::size_t>();
    model.spec.sample_with_replacement = spec_json.at("sample_with_replacement").get<bool>();
    model.spec.k_policy = detail::k_policy_from_json(spec_json.at("k_policy"));
    if (header.contains("tuned_k")) model.tuned_k = header.at("tuned_k").get<std::size_t>();

    const std::size_t p = model.feature_names.size();
    model.standardizer.means = reader.f64_array(p);
    model.standardizer.stdevs = reader.f64_array(p);
    model.standardizer.is_constant =
        header.at("standardizer_constant").get<std::vector<std::uint8_t>>();
    if (model.standardizer.is_constant.size() != p)
      throw FormatError("model header: standardizer flag count mismatch");

    for (const auto& lj : header.at("learners")) {
      Bag bag;
      bag.row_indices = lj.at("rows").get<std::vector<std::size_t>>();
      bag.feature_indices = lj.at("features").get<std::vector<std::size_t>>();
      bag.k_drawn = lj.at("k_drawn").get<std::size_t>();
      bag.k = lj.at("k").get<std::size_t>();
      const std::size_t m = bag.row_indices.size();
      const std::size_t q = bag.feature_indices.size();
      Matrix sub(m, q, reader.f64_array(m * q));
      std::vector<double> targets = reader.f64_array(m);
      std::vector<std::size_t> local_ids(m);
      std::iota(local_ids.begin(), local_ids.end(), std::size_t{0});
      NeighborIndex index(std::move(sub), std::move(local_ids), NeighborIndex::auto_kind(q));
      const std::size_t k = bag.k;
      model.learners.push_back(
          Learner{std::move(bag), KnnRegressor(std::move(index), std::move(targets), k)});
    }
    if (model.learners.size() != model.spec.n_learners)
      throw FormatError("model header: learner count mismatch");
    if (reader.remaining() != 0) throw FormatError("model file has trailing bytes");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("model header field error: ") + e.what());
  }
}

}  // namespace tkre
