#pragma once

// Benchmarks for word vectors: similarity (cosine + Spearman), outlier
// detection (compactness argmin) and concept categorization (k-means scored
// by v-measure). Out-of-vocabulary items are skipped and reported through
// coverage, never zero-filled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "defvec/embedding.hpp"
#include "defvec/error.hpp"
#include "defvec/io.hpp"

namespace defvec {

// ---------------------------------------------------------------------------
// Datasets

struct SimilarityPair {
  std::string w1;
  std::string w2;
  double human_score = 0;
};

struct OutlierInstance {
  std::vector<std::string> cluster;
  std::vector<std::string> outliers;
};

struct CategorizationDataset {
  std::vector<std::pair<std::string, std::string>> items;  // (word, gold category)

  std::size_t k() const {
    std::vector<std::string> categories;
    for (const auto& item : items) categories.push_back(item.second);
    std::sort(categories.begin(), categories.end());
    return static_cast<std::size_t>(std::unique(categories.begin(), categories.end()) - categories.begin());
  }
};

namespace detail {

inline bool skippable(const std::string& line) {
  const auto t = io::trim(line);
  return t.empty() || t.front() == '#';
}

inline std::vector<std::string> tab_fields(const std::string& line, std::size_t expected, std::size_t line_no,
                                           const std::string& name) {
  auto fields = io::split(line, '\t');
  if (fields.size() != expected) {
    throw ValidationError("expected " + std::to_string(expected) + " TAB-separated fields at line " +
                          std::to_string(line_no) + " of " + name);
  }
  for (auto& f : fields) {
    f = std::string(io::trim(f));
    if (f.empty()) throw ValidationError("empty field at line " + std::to_string(line_no) + " of " + name);
  }
  return fields;
}

}  // namespace detail

/// `word1<TAB>word2<TAB>score` per line; words are lowercased.
inline std::vector<SimilarityPair> read_similarity_dataset(std::istream& in, const std::string& name = "<stream>") {
  std::vector<SimilarityPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (io::read_line(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto f = detail::tab_fields(line, 3, line_no, name);
    char* end = nullptr;
    const double score = std::strtod(f[2].c_str(), &end);
    if (end == f[2].c_str() || *end != '\0' || !std::isfinite(score)) {
      throw ValidationError("bad score at line " + std::to_string(line_no) + " of " + name);
    }
    pairs.push_back({io::to_lower(f[0]), io::to_lower(f[1]), score});
  }
  return pairs;
}

/// Blocks separated by blank lines; `C<TAB>word` for cluster members and
/// `O<TAB>word` for outlier candidates.
inline std::vector<OutlierInstance> read_outlier_dataset(std::istream& in, const std::string& name = "<stream>") {
  std::vector<OutlierInstance> instances;
  OutlierInstance current;
  std::size_t block_start = 0;
  const auto close_block = [&](std::size_t line_no) {
    if (current.cluster.empty() && current.outliers.empty()) return;
    if (current.cluster.size() < 2 || current.outliers.empty()) {
      throw ValidationError("outlier block starting at line " + std::to_string(block_start) + " of " + name +
                            " needs >= 2 cluster words and >= 1 outlier (ends at line " + std::to_string(line_no) +
                            ")");
    }
    for (const auto& o : current.outliers) {
      if (std::find(current.cluster.begin(), current.cluster.end(), o) != current.cluster.end()) {
        throw ValidationError("word '" + o + "' is both cluster member and outlier in block at line " +
                              std::to_string(block_start) + " of " + name);
      }
    }
    instances.push_back(std::move(current));
    current = {};
  };
  std::string line;
  std::size_t line_no = 0;
  while (io::read_line(in, line)) {
    ++line_no;
    if (io::trim(line).empty()) {
      close_block(line_no);
      continue;
    }
    if (io::trim(line).front() == '#') continue;
    if (current.cluster.empty() && current.outliers.empty()) block_start = line_no;
    const auto f = detail::tab_fields(line, 2, line_no, name);
    if (f[0] == "C") {
      current.cluster.push_back(io::to_lower(f[1]));
    } else if (f[0] == "O") {
      current.outliers.push_back(io::to_lower(f[1]));
    } else {
      throw ValidationError("line tag must be C or O at line " + std::to_string(line_no) + " of " + name);
    }
  }
  close_block(line_no);
  return instances;
}

/// `word<TAB>category` per line.
inline CategorizationDataset read_categorization_dataset(std::istream& in, const std::string& name = "<stream>") {
  CategorizationDataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (io::read_line(in, line)) {
    ++line_no;
    if (detail::skippable(line)) continue;
    const auto f = detail::tab_fields(line, 2, line_no, name);
    ds.items.emplace_back(io::to_lower(f[0]), f[1]);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Metrics

/// u.v / (|u||v|). A zero vector yields 0 and sets *zero_vector.
template <typename A, typename B>
double cosine_similarity(std::span<const A> u, std::span<const B> v, bool* zero_vector = nullptr) {
  if (u.size() != v.size()) {
    throw Error("cosine: dimension mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  }
  double dot = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i], b = v[i];
    dot += a * b;
    uu += a * a;
    vv += b * b;
  }
  if (zero_vector) *zero_vector = (uu == 0.0 || vv == 0.0);
  if (uu == 0.0 || vv == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

inline double cosine_similarity(const std::vector<float>& u, const std::vector<float>& v, bool* zero_vector = nullptr) {
  return cosine_similarity(std::span<const float>(u), std::span<const float>(v), zero_vector);
}

/// Fractional ranks (1-based); tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("undefined correlation: a side is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("undefined correlation: length mismatch");
  if (xs.size() < 2) throw Error("undefined correlation: fewer than 2 points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

/// Homogeneity, completeness and their harmonic mean, from empirical joint
/// counts with natural-log entropies.
struct VMeasure {
  double homogeneity = 1;
  double completeness = 1;
  double v = 1;
};

inline VMeasure v_measure_parts(std::span<const int> gold, std::span<const int> predicted) {
  if (gold.size() != predicted.size()) throw Error("v_measure: label lists differ in length");
  if (gold.empty()) throw Error("v_measure: no labels");
  const double n = static_cast<double>(gold.size());
  std::map<int, double> gold_counts, pred_counts;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    gold_counts[gold[i]] += 1;
    pred_counts[predicted[i]] += 1;
    joint[{gold[i], predicted[i]}] += 1;
  }
  const auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0;
    for (const auto& [label, c] : counts) h -= (c / n) * std::log(c / n);
    return h;
  };
  double h_gold_given_pred = 0, h_pred_given_gold = 0;
  for (const auto& [key, c] : joint) {
    h_gold_given_pred -= (c / n) * std::log(c / pred_counts[key.second]);
    h_pred_given_gold -= (c / n) * std::log(c / gold_counts[key.first]);
  }
  const double h_gold = entropy(gold_counts), h_pred = entropy(pred_counts);
  VMeasure out;
  out.homogeneity = h_gold == 0.0 ? 1.0 : 1.0 - h_gold_given_pred / h_gold;
  out.completeness = h_pred == 0.0 ? 1.0 : 1.0 - h_pred_given_gold / h_pred;
  const double sum = out.homogeneity + out.completeness;
  out.v = sum == 0.0 ? 0.0 : 2.0 * out.homogeneity * out.completeness / sum;
  return out;
}

inline double v_measure(std::span<const int> gold, std::span<const int> predicted) {
  return v_measure_parts(gold, predicted).v;
}

// ---------------------------------------------------------------------------
// Outlier detection

struct OutlierRanking {
  std::vector<double> compactness;  // mean cosine to the other words
  std::size_t outlier = 0;          // argmin, first occurrence on ties
  bool degenerate = false;          // tied minimum or a zero vector
};

inline OutlierRanking outlier_score(const std::vector<const std::vector<float>*>& vectors) {
  const auto n = vectors.size();
  if (n < 3) throw Error("outlier scoring needs at least 3 words");
  OutlierRanking ranking;
  std::vector<double> sim(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      bool zero = false;
      sim[i * n + j] = sim[j * n + i] = cosine_similarity(*vectors[i], *vectors[j], &zero);
      ranking.degenerate = ranking.degenerate || zero;
    }
  }
  ranking.compactness.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum += sim[i * n + j];
    }
    ranking.compactness[i] = sum / static_cast<double>(n - 1);
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (ranking.compactness[i] < ranking.compactness[ranking.outlier]) ranking.outlier = i;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (i != ranking.outlier && ranking.compactness[i] == ranking.compactness[ranking.outlier]) {
      ranking.degenerate = true;
    }
  }
  return ranking;
}

/// Looks every word up in the table; unresolvable words make the instance skip.
inline OutlierRanking outlier_score(const std::vector<std::string>& words, const EmbeddingTable& table) {
  std::vector<const std::vector<float>*> vectors;
  for (const auto& w : words) {
    const auto* v = table.find(w);
    if (!v) throw ValidationError("word '" + w + "' is not in the embedding table");
    vectors.push_back(v);
  }
  return outlier_score(vectors);
}

// ---------------------------------------------------------------------------
// Clustering

struct KMeansResult {
  std::vector<int> assignment;
  double wcss = 0;
  bool degenerate = false;  // some cluster ended up empty
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    d += t * t;
  }
  return d;
}

inline KMeansResult lloyd_once(const std::vector<std::vector<double>>& points, std::size_t k, std::mt19937_64& rng,
                               std::size_t max_iterations) {
  const auto n = points.size();
  const auto dim = points.front().size();
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // k-means++ seeding.
  std::vector<std::vector<double>> centers;
  std::vector<bool> chosen(n, false);
  std::size_t first = std::min<std::size_t>(static_cast<std::size_t>(unit(rng) * static_cast<double>(n)), n - 1);
  centers.push_back(points[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centers[0]);
  while (centers.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double running = 0;
      for (std::size_t i = 0; i < n; ++i) {
        running += d2[i];
        if (d2[i] > 0.0 && running > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every remaining point coincides with a center.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    centers.push_back(points[pick]);
    chosen[pick] = true;
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
  }

  KMeansResult result;
  result.assignment.assign(n, -1);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(points[i], centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squared_distance(points[i], centers[c]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      if (result.assignment[i] != best) {
        result.assignment[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignment[i]);
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // an empty cluster keeps its center
      for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }

  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(result.assignment[i]);
    ++counts[c];
    result.wcss += squared_distance(points[i], centers[c]);
  }
  result.degenerate = std::any_of(counts.begin(), counts.end(), [](std::size_t c) { return c == 0; });
  return result;
}

}  // namespace detail

inline constexpr std::size_t kKMeansMaxIterations = 300;

/// k-means++ seeding plus Lloyd iterations (until the assignment stops
/// changing, at most 300 rounds), repeated `restarts` times; the run with the
/// lowest within-cluster sum of squares wins, earliest run on ties.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& points, std::size_t k, std::uint64_t seed,
                           std::size_t restarts = 10) {
  if (k < 1) throw Error("kmeans: k must be at least 1");
  if (k > points.size()) {
    throw Error("kmeans: k = " + std::to_string(k) + " exceeds the number of points (" +
                std::to_string(points.size()) + ")");
  }
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw Error("kmeans: points differ in dimension");
  }
  std::mt19937_64 rng(seed);
  KMeansResult best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, restarts); ++r) {
    auto run = detail::lloyd_once(points, k, rng, kKMeansMaxIterations);
    if (r == 0 || run.wcss < best.wcss) best = std::move(run);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Task drivers

struct EvalReport {
  std::string task;
  std::string metric_name;
  double metric = 0;
  double coverage = 0;
  std::size_t skipped = 0;
  std::size_t evaluated = 0;
  std::uint64_t seed = 0;
  bool degenerate = false;
};

inline EvalReport eval_similarity(const EmbeddingTable& table, const std::vector<SimilarityPair>& pairs) {
  std::vector<double> cosines, humans;
  EvalReport report{"similarity", "spearman"};
  for (const auto& pair : pairs) {
    const auto* a = table.find(pair.w1);
    const auto* b = table.find(pair.w2);
    if (!a || !b) {
      ++report.skipped;
      continue;
    }
    bool zero = false;
    cosines.push_back(cosine_similarity(*a, *b, &zero));
    humans.push_back(pair.human_score);
    report.degenerate = report.degenerate || zero;
  }
  if (cosines.size() < 2) {
    throw ValidationError("similarity: fewer than 2 resolvable pairs (" + std::to_string(cosines.size()) + " of " +
                          std::to_string(pairs.size()) + ")");
  }
  report.evaluated = cosines.size();
  report.coverage = static_cast<double>(cosines.size()) / static_cast<double>(pairs.size());
  report.metric = spearman(cosines, humans);
  return report;
}

/// Accuracy in percent over every (cluster, outlier candidate) combination
/// whose words all resolve.
inline EvalReport eval_outliers(const EmbeddingTable& table, const std::vector<OutlierInstance>& instances) {
  EvalReport report{"outlier", "accuracy"};
  std::size_t total = 0, hits = 0;
  for (const auto& instance : instances) {
    std::vector<const std::vector<float>*> cluster;
    bool cluster_ok = true;
    for (const auto& w : instance.cluster) {
      const auto* v = table.find(w);
      if (!v) cluster_ok = false;
      cluster.push_back(v);
    }
    for (const auto& o : instance.outliers) {
      ++total;
      const auto* ov = table.find(o);
      if (!cluster_ok || !ov) {
        ++report.skipped;
        continue;
      }
      auto words = cluster;
      words.push_back(ov);
      const auto ranking = outlier_score(words);
      report.degenerate = report.degenerate || ranking.degenerate;
      ++report.evaluated;
      if (ranking.outlier == cluster.size()) ++hits;
    }
  }
  if (report.evaluated == 0) throw ValidationError("outlier: no resolvable instances");
  report.coverage = static_cast<double>(report.evaluated) / static_cast<double>(total);
  report.metric = 100.0 * static_cast<double>(hits) / static_cast<double>(report.evaluated);
  return report;
}

inline EvalReport eval_categorization(const EmbeddingTable& table, const CategorizationDataset& ds,
                                      std::uint64_t seed, std::size_t restarts = 10) {
  EvalReport report{"categorize", "v_measure"};
  report.seed = seed;
  const auto k = ds.k();
  if (k < 2) throw ValidationError("categorization: need at least 2 categories");
  std::vector<std::vector<double>> points;
  std::vector<int> gold;
  std::unordered_map<std::string, int> category_ids;
  for (const auto& [word, category] : ds.items) {
    const auto* v = table.find(word);
    if (!v) {
      ++report.skipped;
      continue;
    }
    const auto id = category_ids.emplace(category, static_cast<int>(category_ids.size())).first->second;
    gold.push_back(id);
    points.emplace_back(v->begin(), v->end());
  }
  if (points.size() < k) {
    throw ValidationError("categorization: " + std::to_string(points.size()) + " resolvable words for k = " +
                          std::to_string(k));
  }
  const auto clusters = kmeans(points, k, seed, restarts);
  report.evaluated = points.size();
  report.coverage = static_cast<double>(points.size()) / static_cast<double>(ds.items.size());
  report.metric = v_measure(gold, clusters.assignment);
  report.degenerate = clusters.degenerate;
  return report;
}

// ---------------------------------------------------------------------------
// Report output

inline void write_report_text(std::ostream& out, const EvalReport& r) {
  char buf[64];
  out << "task:       " << r.task << '\n';
  std::snprintf(buf, sizeof(buf), "%.6f", r.metric);
  out << r.metric_name << ":" << std::string(r.metric_name.size() < 11 ? 11 - r.metric_name.size() : 1, ' ') << buf
      << '\n';
  std::snprintf(buf, sizeof(buf), "%.4f", r.coverage);
  out << "coverage:   " << buf << " (" << r.evaluated << " evaluated, " << r.skipped << " skipped)\n";
  out << "seed:       " << r.seed << '\n';
  if (r.degenerate) out << "warning:    degenerate embeddings (zero vectors or exact ties)\n";
}

/// key=value lines for scripts.
inline void write_report_kv(std::ostream& out, const EvalReport& r) {
  char buf[64];
  out << "task=" << r.task << '\n';
  out << "metric_name=" << r.metric_name << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", r.metric);
  out << "metric=" << buf << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", r.coverage);
  out << "coverage=" << buf << '\n';
  out << "evaluated=" << r.evaluated << '\n';
  out << "skipped=" << r.skipped << '\n';
  out << "seed=" << r.seed << '\n';
  out << "degenerate=" << (r.degenerate ? 1 : 0) << '\n';
}

}  // namespace defvec
