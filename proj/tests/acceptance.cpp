// Acceptance run: one PASS/FAIL line per criterion, followed by indented
// detail lines. Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "defvec/defvec.hpp"
#include "support/gradient_suite.hpp"
#include "support/oracles.hpp"
#include "support/workspace.hpp"

using namespace defvec;
using namespace defvec::testing;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok    " : "FAIL  ") + what);
  }
  void note(const std::string& what) { details.push_back("      " + what); }
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// ---------------------------------------------------------------------------

Outcome gradient_criterion() {
  Outcome out;
  const auto start = Clock::now();
  std::map<std::string, GradCheck> worst;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    for (const auto& check : gradient_suite(seed)) worst[check.name] = merge(worst[check.name], check.result);
  }
  const double elapsed = seconds_since(start);
  for (const auto& [name, r] : worst) {
    out.require(r.max_rel_error <= kFdTolerance && r.checked > 0,
                fmt("%-26s max rel err %.3g over %zu components (%zu kink crossings skipped)", name.c_str(),
                    r.max_rel_error, r.checked, r.kink_skipped));
  }
  out.require(elapsed <= 60.0, fmt("100 seeds in %.1f s (limit 60 s)", elapsed));
  return out;
}

Outcome conv_oracle_criterion() {
  Outcome out;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> ch(1, 4), side(1, 8), batch(1, 2);
  double worst_double = 0, worst_float = 0;
  for (int trial = 0; trial < 50; ++trial) {
    for (auto kind : {LayerKind::conv, LayerKind::conv_transpose}) {
      const auto in = ch(rng), o = ch(rng), h = side(rng), w = side(rng), b = batch(rng);
      const auto x = random_tensor<double>(rng, b, in, h, w);
      const auto layer = random_layer<double>(rng, kind, Activation::none, in, o);
      const auto want = reference_conv(x, layer);
      const auto got = conv2d_forward(x, layer);
      const auto got_f = conv2d_forward(convert_tensor<float>(x), convert_layer<float>(layer));
      for (std::size_t i = 0; i < want.size(); ++i) {
        worst_double = std::max(worst_double, std::abs(got.values()[i] - want.values()[i]));
        worst_float = std::max(worst_float, std::abs(static_cast<double>(got_f.values()[i]) - want.values()[i]));
      }
    }
  }
  out.require(worst_double <= 1e-6, fmt("50 shapes x {conv, conv_transpose}: max abs diff %.3g (limit 1e-6)", worst_double));
  out.note(fmt("float instantiation: max abs diff %.3g", worst_float));
  return out;
}

Outcome shape_criterion() {
  Outcome out;
  const auto model = make_autoencoder<float>(3);
  Dictionary dict;
  std::vector<std::string> base;
  std::mt19937_64 rng(50);
  std::uniform_int_distribution<int> length(0, 25);
  for (int w = 0; w < 50; ++w) {
    const auto word = "word" + std::to_string(w);
    base.push_back(word);
    std::string definition;
    const int n = length(rng);
    for (int t = 0; t < n; ++t) definition += (t % 4 == 3 ? "the " : "") + ("term" + std::to_string(rng() % 80)) + " ";
    if (n == 0) definition = "a the of";
    dict.entries[word] = {definition};
  }
  const auto build = build_vocabulary(base, dict, default_stopwords());
  const SyntheticSource source(11);

  bool latents_ok = true;
  std::uniform_real_distribution<float> pixel(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    Image image;
    for (auto& p : image.pixels) p = pixel(rng);
    const auto z = encode(model, make_batch<float>(std::vector<Image>{image}));
    latents_ok = latents_ok && z.size() == 32 && z.shape() == Tensor4<float>::Shape{1, 32, 1, 1};
  }
  out.require(latents_ok, "encode: 50 random images -> 1x32x1x1 latent each");

  const auto blank = encode(model, make_batch<float>(std::vector<Image>{blank_image()}));
  std::size_t rows_ok = 0, pad_blocks = 0, pad_ok = 0, min_terms = 19, max_terms = 0;
  const auto table = embed_vocabulary(model, build.vocabulary, source);
  for (const auto& row : table.rows()) {
    const auto& entry = build.vocabulary.entry(row.word);
    min_terms = std::min(min_terms, entry.real_term_count);
    max_terms = std::max(max_terms, entry.real_term_count);
    const bool finite = std::all_of(row.vector.begin(), row.vector.end(), [](float v) { return std::isfinite(v); });
    rows_ok += row.vector.size() == 3200 && finite;
    for (std::size_t i = 0; i < kDefinitionLength; ++i) {
      if (!entry.is_pad(i)) continue;
      for (std::size_t k = 0; k < kImagesPerTerm; ++k) {
        const auto slot = (i + 1) * kImagesPerTerm + k;
        ++pad_blocks;
        pad_ok += std::equal(blank.values().begin(), blank.values().end(), row.vector.begin() + slot * 32);
      }
    }
  }
  out.require(table.size() == 50 && rows_ok == 50,
              fmt("embed: %zu/%zu rows with exactly 3200 finite components", rows_ok, table.size()));
  out.require(pad_ok == pad_blocks, fmt("PAD blocks equal encode(blank): %zu/%zu", pad_ok, pad_blocks));
  out.note(fmt("real terms per word ranged %zu..%zu", min_terms, max_terms));
  return out;
}

Outcome training_criterion(Workspace& ws) {
  Outcome out;
  std::string base, dict;
  for (int t = 0; t < 64; ++t) {
    base += "term" + std::to_string(t) + "\n";
    dict += "term" + std::to_string(t) + "\tterm" + std::to_string((t + 1) % 64) + "\n";
  }
  ws.write("train/base.txt", base);
  ws.write("train/dict.txt", dict);
  const auto run = [&](const std::string& tag) {
    PipelineConfig cfg;
    cfg.set("base_vocab", ws.path("train/base.txt"));
    cfg.set("dictionary", ws.path("train/dict.txt"));
    cfg.set("images", "synthetic:17");
    cfg.set("checkpoint", ws.path("train/" + tag + ".ckpt"));
    cfg.set("batch_size", "32");
    cfg.set("epochs", "25");
    cfg.set("seed", "5");
    return cmd_train(cfg);
  };
  const auto start = Clock::now();
  const auto first = run("a");
  const double one_run = seconds_since(start);
  run("b");

  const auto& h = first.history;
  out.require(h.size() == 25, fmt("%zu epochs recorded", h.size()));
  out.note(fmt("pool: %zu images (64 terms x 5)", first.adam.m.empty() ? 0 : static_cast<std::size_t>(64 * 5)));
  out.require(h.back().mean_loss < 0.9 * h.front().mean_loss,
              fmt("mean BCE %.5f -> %.5f (ratio %.3f, limit < 0.9)", h.front().mean_loss, h.back().mean_loss,
                  h.back().mean_loss / h.front().mean_loss));

  std::istringstream csv(read_bytes(ws.path("train/a.ckpt.loss.csv")));
  std::string line;
  std::getline(csv, line);
  std::size_t rows = 0, lr_exact = 0;
  while (std::getline(csv, line)) {
    const auto fields = io::split(line, ',');
    const double lr = std::strtod(fields.at(1).c_str(), nullptr);
    const auto epoch = std::stoul(fields.at(0));
    lr_exact += lr == 0.00215 * std::pow(2.0, -std::floor(static_cast<double>(epoch) / 5.0));
    ++rows;
  }
  out.require(rows == 25 && lr_exact == 25, fmt("lr column equals 0.00215*2^-floor(e/5) exactly on %zu/25 rows", lr_exact));
  out.require(read_bytes(ws.path("train/a.ckpt")) == read_bytes(ws.path("train/b.ckpt")) &&
                  read_bytes(ws.path("train/a.ckpt.loss.csv")) == read_bytes(ws.path("train/b.ckpt.loss.csv")),
              "two runs from seed 5: checkpoints and loss CSVs byte-identical");
  out.require(one_run <= 600.0, fmt("one run took %.1f s (limit 600 s)", one_run));
  return out;
}

Outcome metric_criterion() {
  Outcome out;
  std::mt19937_64 rng(55);

  double spearman_worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(2 + rng() % 19);
    std::vector<double> xs(n), ys(n);
    std::normal_distribution<double> normal;
    do {
      for (std::size_t i = 0; i < n; ++i) {
        xs[i] = trial % 2 ? static_cast<double>(rng() % 4) : normal(rng);
        ys[i] = trial % 3 ? static_cast<double>(rng() % 5) : normal(rng);
      }
    } while (std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end() ||
             std::adjacent_find(ys.begin(), ys.end(), std::not_equal_to<>()) == ys.end());
    spearman_worst = std::max(spearman_worst, std::abs(spearman(xs, ys) - spearman_oracle(xs, ys)));
  }
  out.require(spearman_worst <= 1e-9, fmt("spearman vs rank-then-Pearson oracle, 200 lists: max diff %.3g", spearman_worst));

  const double ln2 = std::log(2.0), ln3 = std::log(3.0);
  const double h_third = -(2.0 / 3) * std::log(2.0 / 3) - (1.0 / 3) * std::log(1.0 / 3);
  const double h6 = 2.0 / 3, c6 = 1 - h_third / ln3;
  struct Case {
    std::vector<int> gold, pred;
    double expected;
  };
  const std::vector<Case> cases = {
      {{0, 0, 1, 1}, {0, 1, 2, 2}, 2 * 1 * (1 - 0.5 * ln2 / (1.5 * ln2)) / (2 - 0.5 * ln2 / (1.5 * ln2))},
      {{0, 0, 1, 1}, {5, 5, 3, 3}, 1.0},
      {{0, 0, 1, 1}, {0, 1, 0, 1}, 0.0},
      {{0, 0, 1, 1}, {0, 0, 0, 0}, 0.0},
      {{0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 2, 2}, 2 * h6 * c6 / (h6 + c6)},
  };
  double case_worst = 0;
  for (const auto& c : cases) case_worst = std::max(case_worst, std::abs(v_measure(c.gold, c.pred) - c.expected));
  out.require(case_worst <= 1e-9 && std::abs(v_measure(cases[0].gold, cases[0].pred) - 0.8) <= 1e-9,
              fmt("v-measure on %zu hand-computed cases (incl. 0.8 example): max diff %.3g", cases.size(), case_worst));

  double perm_worst = 0;
  std::vector<int> gold(40), pred(40);
  for (auto& g : gold) g = static_cast<int>(rng() % 4);
  for (auto& p : pred) p = static_cast<int>(rng() % 5);
  const double base_v = v_measure(gold, pred);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> pg = {0, 1, 2, 3}, pp = {0, 1, 2, 3, 4};
    std::shuffle(pg.begin(), pg.end(), rng);
    std::shuffle(pp.begin(), pp.end(), rng);
    auto g2 = gold, p2 = pred;
    for (auto& g : g2) g = pg[g];
    for (auto& p : p2) p = pp[p] * 3 + 1;
    perm_worst = std::max(perm_worst, std::abs(v_measure(g2, p2) - base_v));
  }
  out.require(perm_worst <= 1e-9, fmt("v-measure under 50 label permutations: max change %.3g", perm_worst));

  std::size_t agree = 0;
  std::normal_distribution<float> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(3 + rng() % 8);
    std::vector<std::vector<float>> vecs(n, std::vector<float>(12));
    for (auto& v : vecs) {
      for (auto& x : v) x = normal(rng);
    }
    std::vector<const std::vector<float>*> ptrs;
    for (const auto& v : vecs) ptrs.push_back(&v);
    std::vector<double> mean_cos(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        double dot = 0, ni = 0, nj = 0;
        for (std::size_t d = 0; d < 12; ++d) {
          dot += double(vecs[i][d]) * vecs[j][d];
          ni += double(vecs[i][d]) * vecs[i][d];
          nj += double(vecs[j][d]) * vecs[j][d];
        }
        mean_cos[i] += dot / std::sqrt(ni * nj) / static_cast<double>(n - 1);
      }
    }
    const auto expected = static_cast<std::size_t>(std::min_element(mean_cos.begin(), mean_cos.end()) - mean_cos.begin());
    agree += outlier_score(ptrs).outlier == expected;
  }
  out.require(agree == 100, fmt("outlier argmin vs O(n^2) recomputation: %zu/100 agree", agree));
  return out;
}

// Three prototypes with nothing in common: a red field with a pale bar, a
// green field with a dark disc, a blue/yellow checkerboard.
std::array<double, 3> prototype_pixel(int category, double x, double y) {
  switch (category) {
    case 0:
      return std::abs(y - 0.5) < 0.15 ? std::array<double, 3>{0.95, 0.9, 0.9} : std::array<double, 3>{0.9, 0.1, 0.1};
    case 1:
      return (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) < 0.09 ? std::array<double, 3>{0.05, 0.1, 0.05}
                                                                 : std::array<double, 3>{0.1, 0.85, 0.2};
    default:
      return (static_cast<int>(x * 4) + static_cast<int>(y * 4)) % 2 ? std::array<double, 3>{0.1, 0.15, 0.9}
                                                                     : std::array<double, 3>{0.95, 0.9, 0.1};
  }
}

/// Perturbed prototype written as a 40x40 P6 file, so loading also resizes.
void write_planted_image(const std::string& path, int category, std::mt19937_64& rng) {
  constexpr std::size_t side = 40;
  std::uniform_real_distribution<double> noise(-0.12, 0.12), shift(-0.06, 0.06), gain(0.85, 1.1);
  const double dx = shift(rng), dy = shift(rng), g = gain(rng);
  RgbRaster raster{side, side, std::vector<std::uint8_t>(side * side * 3)};
  for (std::size_t y = 0; y < side; ++y) {
    for (std::size_t x = 0; x < side; ++x) {
      const auto rgb = prototype_pixel(category, (x + 0.5) / side + dx, (y + 0.5) / side + dy);
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = std::clamp(rgb[c] * g + noise(rng), 0.0, 1.0);
        raster.bytes[(y * side + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255));
      }
    }
  }
  write_ppm(path, raster);
}

Outcome planted_criterion(Workspace& ws) {
  Outcome out;
  const auto start = Clock::now();
  const std::vector<std::string> prefixes = {"red", "grn", "blu"};
  std::vector<std::string> words;
  std::vector<int> category;
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 8; ++i) {
      words.push_back(prefixes[c] + std::to_string(i));
      category.push_back(c);
    }
  }
  std::mt19937_64 rng(606);
  std::string base, dict, cats, sims, outliers;
  for (std::size_t w = 0; w < words.size(); ++w) {
    base += words[w] + "\n";
    dict += words[w] + "\t";
    for (std::size_t v = 0; v < words.size(); ++v) {
      if (v != w && category[v] == category[w]) dict += words[v] + " ";
    }
    dict += "\n";
    cats += words[w] + "\t" + prefixes[category[w]] + "\n";
    std::filesystem::create_directories(ws.path("planted/images/" + words[w]));
    for (std::size_t k = 0; k < kImagesPerTerm; ++k) {
      write_planted_image(ws.path("planted/images/" + words[w] + "/" + std::to_string(k) + ".ppm"), category[w], rng);
    }
  }
  std::size_t same_pairs = 0, cross_pairs = 0;
  for (std::size_t a = 0; a < words.size(); ++a) {
    for (std::size_t b = a + 1; b < words.size(); ++b) {
      const bool same = category[a] == category[b];
      sims += words[a] + "\t" + words[b] + "\t" + (same ? "1" : "0") + "\n";
      (same ? same_pairs : cross_pairs)++;
    }
  }
  for (int c = 0; c < 3; ++c) {
    for (int half = 0; half < 2; ++half) {
      for (int i = 0; i < 4; ++i) outliers += "C\t" + prefixes[c] + std::to_string(half * 4 + i) + "\n";
      for (int o = 0; o < 3; ++o) {
        if (o == c) continue;
        for (int i = 0; i < 2; ++i) outliers += "O\t" + prefixes[o] + std::to_string(half * 4 + i) + "\n";
      }
      outliers += "\n";
    }
  }
  ws.write("planted/base.txt", base);
  ws.write("planted/dict.txt", dict);
  ws.write("planted/categories.txt", cats);
  ws.write("planted/similarity.txt", sims);
  ws.write("planted/outliers.txt", outliers);
  ws.write("planted/pipeline.cfg",
           "base_vocab = base.txt\n"
           "dictionary = dict.txt\n"
           "images = images\n"
           "vocab_out = out/vocab.tsv\n"
           "checkpoint = out/model.ckpt\n"
           "table = out/table.bin\n"
           "table_format = binary\n"
           "coverage_report = out/coverage.tsv\n"
           "similarity = similarity.txt\n"
           "outliers = outliers.txt\n"
           "categorization = categories.txt\n"
           "report_dir = out/reports\n"
           "seed = 1\n");
  std::filesystem::create_directories(ws.path("planted/out"));
  const auto cfg = PipelineConfig::load(ws.path("planted/pipeline.cfg"));

  const auto build = cmd_build_vocab(cfg);
  const auto trained = cmd_train(cfg);
  const auto table = cmd_embed(cfg);
  const auto cat = cmd_eval(cfg, "categorize");
  const auto outl = cmd_eval(cfg, "outlier");
  const auto sim = cmd_eval(cfg, "similarity");
  const double elapsed = seconds_since(start);

  out.note(fmt("%zu words, %zu images, train loss %.4f -> %.4f", build.vocabulary.all_words().size(),
               build.vocabulary.all_words().size() * kImagesPerTerm, trained.history.front().mean_loss,
               trained.history.back().mean_loss));
  out.require(cat.metric >= 0.9 && cat.coverage == 1.0,
              fmt("categorization v-measure %.4f (limit >= 0.9), coverage %.2f", cat.metric, cat.coverage));
  out.require(outl.metric == 100.0 && outl.coverage == 1.0,
              fmt("outlier accuracy %.2f%% over %zu instances (limit 100%%)", outl.metric, outl.evaluated));

  // Separation diagnostics for the 0/1-scored pair list.
  std::vector<double> same_cos, cross_cos;
  for (std::size_t a = 0; a < words.size(); ++a) {
    for (std::size_t b = a + 1; b < words.size(); ++b) {
      const double c = cosine_similarity(*table.find(words[a]), *table.find(words[b]));
      (category[a] == category[b] ? same_cos : cross_cos).push_back(c);
    }
  }
  std::size_t ordered = 0;
  for (double s : same_cos) {
    for (double x : cross_cos) ordered += s > x;
  }
  const double ceiling = binary_spearman_ceiling(cross_pairs, same_pairs);
  out.require(sim.metric >= 0.9, fmt("similarity spearman %.4f over %zu pairs (limit >= 0.9)", sim.metric, sim.evaluated));
  out.note(fmt("same-category cosine above cross-category cosine for %zu/%zu (same, cross) combinations",
               ordered, same_cos.size() * cross_cos.size()));
  out.note(fmt("min same-category cosine %.4f, max cross-category cosine %.4f",
               *std::min_element(same_cos.begin(), same_cos.end()),
               *std::max_element(cross_cos.begin(), cross_cos.end())));
  out.note(fmt("untied spearman ceiling for %zu ones / %zu zeros: %.4f", same_pairs, cross_pairs, ceiling));
  out.require(elapsed <= 900.0, fmt("pipeline took %.1f s (limit 900 s)", elapsed));
  return out;
}

Outcome persistence_criterion(Workspace& ws) {
  Outcome out;
  auto model = make_autoencoder<float>(70);
  const SyntheticSource source(70);
  std::vector<Image> images;
  for (const char* term : {"alpha", "beta", "gamma"}) {
    for (auto& image : source.images_for(term)) images.push_back(std::move(image));
  }
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 4;
  AdamState<float> adam;
  train(model, images, tc, adam);
  std::filesystem::create_directories(ws.path("persist"));

  save_checkpoint(ws.path("persist/a.ckpt"), model, &adam);
  const auto loaded = load_checkpoint(ws.path("persist/a.ckpt"));
  save_checkpoint(ws.path("persist/b.ckpt"), loaded.model, loaded.adam ? &*loaded.adam : nullptr);
  out.require(read_bytes(ws.path("persist/a.ckpt")) == read_bytes(ws.path("persist/b.ckpt")) &&
                  loaded.adam && loaded.adam->step == adam.step,
              fmt("checkpoint save -> load -> save byte-identical (%zu bytes, adam step %llu)",
                  read_bytes(ws.path("persist/a.ckpt")).size(), static_cast<unsigned long long>(adam.step)));

  Dictionary dict;
  dict.entries["alpha"] = {"beta gamma"};
  dict.entries["beta"] = {"alpha"};
  const auto build = build_vocabulary({"alpha", "beta"}, dict, default_stopwords());
  const auto table = embed_vocabulary(model, build.vocabulary, source);
  save_table(ws.path("persist/a.bin"), table, TableFormat::binary);
  const auto table_bin = load_table(ws.path("persist/a.bin"));
  save_table(ws.path("persist/b.bin"), table_bin, TableFormat::binary);
  out.require(table_bin == table && read_bytes(ws.path("persist/a.bin")) == read_bytes(ws.path("persist/b.bin")),
              "binary table save -> load -> save byte-identical");

  save_table(ws.path("persist/a.txt"), table, TableFormat::text);
  const auto table_txt = load_table(ws.path("persist/a.txt"));
  double worst = table_txt.size() == table.size() ? 0.0 : INFINITY;
  for (std::size_t r = 0; r < std::min(table.size(), table_txt.size()); ++r) {
    for (std::size_t i = 0; i < table.dim(); ++i) {
      worst = std::max(worst, std::abs(double(table.rows()[r].vector[i]) - table_txt.rows()[r].vector[i]));
    }
  }
  out.require(worst <= 1e-6, fmt("text table round trip: max component diff %.3g (limit 1e-6)", worst));
  return out;
}

Outcome reference_criterion() {
  Outcome out;
  const auto readme = read_bytes(DEFVEC_README);
  out.require(!readme.empty(), "README.md present");
  std::istringstream lines(readme);
  std::string line;
  std::map<std::string, bool> found = {{"WS-353", false}, {"8-8-8", false}, {"ESSLI-2008", false}};
  const std::map<std::string, std::string> value = {{"WS-353", "0.72"}, {"8-8-8", "52.25"}, {"ESSLI-2008", "0.78"}};
  while (std::getline(lines, line)) {
    for (auto& [name, ok] : found) {
      ok = ok || (line.find(name) != std::string::npos && line.find(value.at(name)) != std::string::npos);
    }
  }
  for (const auto& [name, ok] : found) {
    out.require(ok, fmt("README lists %s reference %s", name.c_str(), value.at(name).c_str()));
  }
  return out;
}

}  // namespace

int main() {
  Workspace ws("acceptance");
  struct Criterion {
    const char* title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"gradient suite", gradient_criterion},
      {"convolution oracle", conv_oracle_criterion},
      {"shape and dimension contract", shape_criterion},
      {"training sanity", [&] { return training_criterion(ws); }},
      {"metric oracles", metric_criterion},
      {"planted-structure pipeline", [&] { return planted_criterion(ws); }},
      {"persistence", [&] { return persistence_criterion(ws); }},
      {"reference values", reference_criterion},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].run();
    } catch (const std::exception& e) {
      outcome.require(false, std::string("threw: ") + e.what());
    }
    failures += !outcome.pass;
    std::printf("%s  %zu  %s\n", outcome.pass ? "PASS" : "FAIL", i + 1, criteria[i].title);
    for (const auto& d : outcome.details) std::printf("        %s\n", d.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
