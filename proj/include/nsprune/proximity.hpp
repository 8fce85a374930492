#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nsprune/core.hpp"
#include "nsprune/errors.hpp"

namespace nsprune {

enum class Metric { Euclidean, Cosine };

inline const char* metric_name(Metric m) {
  return m == Metric::Euclidean ? "euclidean" : "cosine";
}

inline Metric metric_from_name(const std::string& name) {
  if (name == "euclidean") return Metric::Euclidean;
  if (name == "cosine") return Metric::Cosine;
  throw ValidationError("unknown metric '" + name + "'");
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct EmbeddingTable {
  int dim = 0;
  std::map<std::string, std::vector<double>> rows;

  const std::vector<double>& at(const std::string& instance_id) const {
    auto it = rows.find(instance_id);
    if (it == rows.end())
      throw ValidationError("no embedding for instance '" + instance_id + "'");
    return it->second;
  }

  void insert(const std::string& instance_id, std::vector<double> v) {
    if (dim == 0) dim = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim)
      throw ValidationError("embedding for '" + instance_id + "' has dimension " +
                            std::to_string(v.size()) + ", expected " + std::to_string(dim));
    if (!rows.emplace(instance_id, std::move(v)).second)
      throw ValidationError("duplicate embedding row for instance '" + instance_id + "'");
  }
};

// CSV with header instance_id,v0,...,v{d-1}.
inline EmbeddingTable load_embeddings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open embeddings file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty embeddings file");
  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::stringstream ss(s);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    return fields;
  };
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split(line);
  if (header.empty() || header[0] != "instance_id")
    throw ValidationError(path + ": header must start with 'instance_id'");
  const int dim = static_cast<int>(header.size()) - 1;
  if (dim < 1) throw ValidationError(path + ": header declares no vector columns");
  for (int i = 0; i < dim; ++i)
    if (header[i + 1] != "v" + std::to_string(i))
      throw ValidationError(path + ": header column " + std::to_string(i + 1) +
                            " must be v" + std::to_string(i));

  EmbeddingTable table;
  table.dim = dim;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields = split(line);
    if (static_cast<int>(fields.size()) != dim + 1)
      throw ValidationError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(dim + 1) + " fields");
    std::vector<double> v(dim);
    for (int i = 0; i < dim; ++i) {
      try {
        v[i] = std::stod(fields[i + 1]);
      } catch (const std::exception&) {
        throw ValidationError(path + ":" + std::to_string(line_no) + ": bad float '" +
                              fields[i + 1] + "'");
      }
    }
    table.insert(fields[0], std::move(v));
  }
  return table;
}

inline void save_embeddings_csv(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write embeddings file '" + path + "'");
  out << "instance_id";
  for (int i = 0; i < table.dim; ++i) out << ",v" << i;
  out << '\n';
  char buf[64];
  for (const auto& [id, v] : table.rows) {
    out << id;
    for (double x : v) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Distances
// ---------------------------------------------------------------------------

inline double distance(const std::vector<double>& u, const std::vector<double>& v, Metric metric) {
  if (u.size() != v.size())
    throw ValidationError("distance: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  if (metric == Metric::Euclidean) {
    double acc = 0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double d = u[i] - v[i];
      acc += d * d;
    }
    return std::sqrt(acc);
  }
  double dot = 0, nu = 0, nv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0)
    throw ValidationError("cosine distance undefined for zero vectors");
  double c = dot / (std::sqrt(nu) * std::sqrt(nv));
  c = std::clamp(c, -1.0, 1.0);
  return 1.0 - c;
}

// ---------------------------------------------------------------------------
// Candidate edges
// ---------------------------------------------------------------------------

// Directed edge between instance nodes of two DIFFERENT batch samples.
struct CandidateEdge {
  int src_sample = 0;  // index into the batch
  int src_pos = 0;     // position within the sample's instance vector
  int dst_sample = 0;
  int dst_pos = 0;
  std::string src_instance;
  std::string dst_instance;
  double distance = 0;
};

struct CandidateEdgeSet {
  std::vector<CandidateEdge> edges;  // sorted by (src node, distance, dst instance id)
  int k = 0;                         // 0 in threshold mode
  std::optional<double> theta;
  Metric metric = Metric::Euclidean;
  std::vector<std::string> warnings;
};

namespace detail {

struct Node {
  int sample = 0;
  int pos = 0;
  const std::string* id = nullptr;
  const std::vector<double>* vec = nullptr;
};

inline std::vector<Node> batch_nodes(const std::vector<NesySample>& batch,
                                     const EmbeddingTable& emb) {
  std::vector<Node> nodes;
  for (int s = 0; s < static_cast<int>(batch.size()); ++s)
    for (int p = 0; p < batch[s].arity(); ++p)
      nodes.push_back({s, p, &batch[s].instance_ids[p], &emb.at(batch[s].instance_ids[p])});
  return nodes;
}

inline void sort_edges(std::vector<CandidateEdge>& edges) {
  std::sort(edges.begin(), edges.end(), [](const CandidateEdge& a, const CandidateEdge& b) {
    return std::tie(a.src_sample, a.src_pos, a.distance, a.dst_instance) <
           std::tie(b.src_sample, b.src_pos, b.distance, b.dst_instance);
  });
}

}  // namespace detail

// Exact brute-force top-k: for every node, a directed edge to each of its k
// nearest cross-sample nodes. Distance ties prefer the smaller instance id.
// k larger than the available cross-sample nodes is clamped with a warning.
inline CandidateEdgeSet candidate_edges(const std::vector<NesySample>& batch,
                                        const EmbeddingTable& emb, int k, Metric metric) {
  if (batch.size() < 2)
    throw ValidationError("candidate_edges: batch must contain at least 2 samples");
  if (k < 1) throw ValidationError("candidate_edges: k must be >= 1");

  CandidateEdgeSet out;
  out.k = k;
  out.metric = metric;
  const std::vector<detail::Node> nodes = detail::batch_nodes(batch, emb);

  bool clamped = false;
  std::vector<std::pair<double, int>> cand;  // (distance, node index)
  for (const auto& src : nodes) {
    cand.clear();
    for (int j = 0; j < static_cast<int>(nodes.size()); ++j) {
      if (nodes[j].sample == src.sample) continue;
      cand.emplace_back(distance(*src.vec, *nodes[j].vec, metric), j);
    }
    const int take = std::min<int>(k, static_cast<int>(cand.size()));
    if (take < k) clamped = true;
    std::partial_sort(cand.begin(), cand.begin() + take, cand.end(),
                      [&](const auto& a, const auto& b) {
                        if (a.first != b.first) return a.first < b.first;
                        return *nodes[a.second].id < *nodes[b.second].id;
                      });
    for (int t = 0; t < take; ++t) {
      const auto& dst = nodes[cand[t].second];
      out.edges.push_back({src.sample, src.pos, dst.sample, dst.pos, *src.id, *dst.id,
                           cand[t].first});
    }
  }
  if (clamped)
    out.warnings.push_back("k=" + std::to_string(k) +
                           " exceeds the cross-sample instance count; clamped");
  detail::sort_edges(out.edges);
  return out;
}

// Threshold rule: every cross-sample edge with distance strictly below theta.
inline CandidateEdgeSet candidate_edges_threshold(const std::vector<NesySample>& batch,
                                                  const EmbeddingTable& emb, double theta,
                                                  Metric metric) {
  if (batch.size() < 2)
    throw ValidationError("candidate_edges: batch must contain at least 2 samples");
  CandidateEdgeSet out;
  out.theta = theta;
  out.metric = metric;
  const std::vector<detail::Node> nodes = detail::batch_nodes(batch, emb);
  for (const auto& src : nodes) {
    for (const auto& dst : nodes) {
      if (dst.sample == src.sample) continue;
      const double d = distance(*src.vec, *dst.vec, metric);
      if (d < theta)
        out.edges.push_back({src.sample, src.pos, dst.sample, dst.pos, *src.id, *dst.id, d});
    }
  }
  detail::sort_edges(out.edges);
  return out;
}

inline json edges_to_json(const std::vector<NesySample>& batch, const CandidateEdgeSet& set) {
  json j;
  j["metric"] = metric_name(set.metric);
  if (set.theta)
    j["theta"] = *set.theta;
  else
    j["k"] = set.k;
  j["warnings"] = set.warnings;
  j["edges"] = json::array();
  for (const auto& e : set.edges) {
    json ej;
    ej["src_sample"] = batch[e.src_sample].id;
    ej["src_instance"] = e.src_instance;
    ej["dst_sample"] = batch[e.dst_sample].id;
    ej["dst_instance"] = e.dst_instance;
    ej["distance"] = e.distance;
    j["edges"].push_back(std::move(ej));
  }
  return j;
}

}  // namespace nsprune
