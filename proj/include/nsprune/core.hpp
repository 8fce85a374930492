#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nsprune/errors.hpp"

namespace nsprune {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct LabelSpace {
  int class_count = 0;
  std::vector<std::string> class_names;  // empty, or one name per class

  bool operator==(const LabelSpace&) const = default;
};

enum class Theory { Sum, Max, Hwf };

inline const char* theory_name(Theory t) {
  switch (t) {
    case Theory::Sum: return "sum";
    case Theory::Max: return "max";
    case Theory::Hwf: return "hwf";
  }
  return "?";
}

inline Theory theory_from_name(const std::string& name) {
  if (name == "sum") return Theory::Sum;
  if (name == "max") return Theory::Max;
  if (name == "hwf") return Theory::Hwf;
  throw ValidationError("unknown constraint theory '" + name + "'");
}

struct Constraint {
  Theory theory = Theory::Sum;
  long long target = 0;
  int arity = 0;

  bool operator==(const Constraint&) const = default;
};

// A pre-image assigns one class id per instance position.
using PreImage = std::vector<int>;
// Lexicographically sorted, duplicate-free list of pre-images.
using PreImageSet = std::vector<PreImage>;

struct NesySample {
  std::string id;
  std::vector<std::string> instance_ids;
  Constraint constraint;
  PreImageSet preimages;  // empty until abduction fills it
  std::optional<PreImage> gold;

  int arity() const { return static_cast<int>(instance_ids.size()); }

  bool operator==(const NesySample&) const = default;
};

struct Instance {
  std::string id;
  std::string sample_id;
  int position = 0;
};

struct Dataset {
  LabelSpace label_space;
  std::vector<NesySample> samples;

  std::size_t size() const { return samples.size(); }

  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

// Sorts a sample's pre-images into the canonical lexicographic order.
inline void normalize_preimages(NesySample& sample) {
  std::sort(sample.preimages.begin(), sample.preimages.end());
}

inline bool contains_preimage(const PreImageSet& set, const PreImage& p) {
  return std::binary_search(set.begin(), set.end(), p);
}

namespace detail {

[[noreturn]] inline void fail_sample(const std::string& sample_id, const std::string& rule) {
  throw ValidationError("sample '" + sample_id + "': " + rule);
}

inline void validate_sample(const NesySample& s, const LabelSpace& space) {
  const int c = space.class_count;
  if (s.id.empty()) throw ValidationError("sample with empty id");
  if (s.instance_ids.empty()) fail_sample(s.id, "no instances");
  if (s.constraint.arity != s.arity())
    fail_sample(s.id, "constraint arity does not match instance count");
  if (s.constraint.theory == Theory::Hwf && s.arity() % 2 == 0)
    fail_sample(s.id, "hwf arity must be odd");
  for (const auto& iid : s.instance_ids)
    if (iid.empty()) fail_sample(s.id, "empty instance id");

  for (const auto& p : s.preimages) {
    if (static_cast<int>(p.size()) != s.arity())
      fail_sample(s.id, "pre-image length does not match instance count");
    for (int label : p)
      if (label < 0 || label >= c) fail_sample(s.id, "pre-image label out of range");
  }
  if (!std::is_sorted(s.preimages.begin(), s.preimages.end()))
    fail_sample(s.id, "pre-images not in canonical lexicographic order");
  if (std::adjacent_find(s.preimages.begin(), s.preimages.end()) != s.preimages.end())
    fail_sample(s.id, "duplicate pre-image");

  if (s.gold) {
    if (static_cast<int>(s.gold->size()) != s.arity())
      fail_sample(s.id, "gold label length does not match instance count");
    for (int label : *s.gold)
      if (label < 0 || label >= c) fail_sample(s.id, "gold label out of range");
    if (!s.preimages.empty() && !contains_preimage(s.preimages, *s.gold))
      fail_sample(s.id, "gold pre-image missing from pre-image set");
  }
}

}  // namespace detail

// Checks every structural invariant; throws ValidationError naming the sample
// and the violated rule. Pre-image sets may be empty (pre-abduction state).
inline void validate_dataset(const Dataset& d) {
  if (d.label_space.class_count < 2)
    throw ValidationError("label space must have at least 2 classes");
  if (!d.label_space.class_names.empty() &&
      static_cast<int>(d.label_space.class_names.size()) != d.label_space.class_count)
    throw ValidationError("class_names length does not match class_count");
  if (d.samples.empty()) throw ValidationError("dataset has no samples");

  std::set<std::string> sample_ids;
  std::set<std::string> instance_ids;
  for (const auto& s : d.samples) {
    detail::validate_sample(s, d.label_space);
    if (!sample_ids.insert(s.id).second)
      detail::fail_sample(s.id, "duplicate sample id");
    for (const auto& iid : s.instance_ids)
      if (!instance_ids.insert(iid).second)
        detail::fail_sample(s.id, "duplicate instance id '" + iid + "'");
  }
}

// True once abduction has run: every sample carries at least one pre-image.
inline bool dataset_abduced(const Dataset& d) {
  return std::all_of(d.samples.begin(), d.samples.end(),
                     [](const NesySample& s) { return !s.preimages.empty(); });
}

inline std::vector<Instance> dataset_instances(const Dataset& d) {
  std::vector<Instance> out;
  for (const auto& s : d.samples)
    for (int p = 0; p < s.arity(); ++p)
      out.push_back({s.instance_ids[p], s.id, p});
  return out;
}

// ---------------------------------------------------------------------------
// JSON Lines serialization
// ---------------------------------------------------------------------------
// Line 1: {"label_space":{"class_count":c[,"class_names":[...]]}}
// Then one sample per line, keys in fixed order; "preimages" is always
// present (as [] when empty), "gold" only when known.

namespace detail {

inline json sample_to_json(const NesySample& s) {
  json j;
  j["id"] = s.id;
  j["instances"] = s.instance_ids;
  j["constraint"] = {{"theory", theory_name(s.constraint.theory)},
                     {"target", s.constraint.target},
                     {"arity", s.constraint.arity}};
  j["preimages"] = s.preimages;
  if (s.gold) j["gold"] = *s.gold;
  return j;
}

inline PreImage preimage_from_json(const json& j, const std::string& sample_id) {
  if (!j.is_array()) fail_sample(sample_id, "pre-image is not an array");
  PreImage p;
  for (const auto& v : j) {
    if (!v.is_number_integer()) fail_sample(sample_id, "pre-image label is not an integer");
    p.push_back(v.get<int>());
  }
  return p;
}

inline NesySample sample_from_json(const json& j) {
  NesySample s;
  if (!j.contains("id") || !j["id"].is_string())
    throw ValidationError("sample line missing string 'id'");
  s.id = j["id"].get<std::string>();
  if (!j.contains("instances") || !j["instances"].is_array())
    fail_sample(s.id, "missing 'instances' array");
  for (const auto& v : j["instances"]) s.instance_ids.push_back(v.get<std::string>());
  if (!j.contains("constraint") || !j["constraint"].is_object())
    fail_sample(s.id, "missing 'constraint' object");
  const json& c = j["constraint"];
  if (!c.contains("theory") || !c.contains("target") || !c.contains("arity"))
    fail_sample(s.id, "constraint needs theory, target, arity");
  s.constraint.theory = theory_from_name(c["theory"].get<std::string>());
  s.constraint.target = c["target"].get<long long>();
  s.constraint.arity = c["arity"].get<int>();
  if (j.contains("preimages")) {
    for (const auto& pj : j["preimages"])
      s.preimages.push_back(preimage_from_json(pj, s.id));
    normalize_preimages(s);
  }
  if (j.contains("gold") && !j["gold"].is_null())
    s.gold = preimage_from_json(j["gold"], s.id);
  return s;
}

}  // namespace detail

inline Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");

  Dataset d;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!header_seen) {
      if (!j.contains("label_space"))
        throw ValidationError(path + ":" + std::to_string(line_no) +
                              ": first line must carry the label_space header");
      const json& ls = j["label_space"];
      d.label_space.class_count = ls.at("class_count").get<int>();
      if (ls.contains("class_names"))
        d.label_space.class_names = ls["class_names"].get<std::vector<std::string>>();
      header_seen = true;
      continue;
    }
    try {
      d.samples.push_back(detail::sample_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!header_seen) throw ValidationError(path + ": empty dataset file");
  validate_dataset(d);
  return d;
}

// Byte-deterministic: fixed key order, canonical pre-image order, '\n' endings.
inline void save_dataset(const Dataset& d, const std::string& path) {
  validate_dataset(d);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write dataset file '" + path + "'");
  json header;
  json ls;
  ls["class_count"] = d.label_space.class_count;
  if (!d.label_space.class_names.empty()) ls["class_names"] = d.label_space.class_names;
  header["label_space"] = ls;
  out << header.dump() << '\n';
  for (const auto& s : d.samples) out << detail::sample_to_json(s).dump() << '\n';
  if (!out) throw ValidationError("I/O failure writing '" + path + "'");
}

}  // namespace nsprune
