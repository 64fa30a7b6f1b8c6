// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "commands.hpp"
#include "convert.hpp"
#include "support.hpp"
#include "temp_dir.hpp"
#include "ttk/model.hpp"
#include "ttk/train.hpp"
#include "ttk/ttcore.hpp"
#include "ttk/ttlayer.hpp"
#include "ttk/tucker.hpp"

using namespace ttk;
using ttk::testing::check_layer_gradients;
using ttk::testing::check_model_gradients;
using ttk::testing::random_tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %d %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
              secs, limit_s, in_time ? "" : ", too slow");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rel_norm(const DenseTensor& a, const DenseTensor& ref) {
  double diff = 0.0;
  for (Index i = 0; i < a.size(); ++i) diff += (a[i] - ref[i]) * (a[i] - ref[i]);
  return std::sqrt(diff) / std::max(frobenius_norm(ref), 1e-300);
}

DenseTensor dense_oracle(const TTLinearLayer& layer, const DenseTensor& x) {
  Matrix y = matmul_nt(as_matrix(x, x.dim(0), x.dim(1)), ttm_to_dense(layer.weights));
  for (Index b = 0; b < y.rows(); ++b)
    for (Index j = 0; j < y.cols(); ++j) {
      y(b, j) += layer.bias[j];
      if (layer.activation == Activation::relu) y(b, j) = std::max(0.0, y(b, j));
    }
  return as_tensor(y);
}

TTLinearLayer biased_layer(const Shape& in, const Shape& out, const RankVector& r, std::uint64_t seed,
                           Activation act) {
  TTLinearLayer l = tt_layer_random(in, out, r, seed, act);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (double& b : l.bias) b = u(rng);
  return l;
}

Outcome demo_criterion() {
  std::ostringstream out, err;
  const int code = cli::run_cli({"demo"}, out, err);
  const Index n = 3;
  DenseTensor t(Shape{n, n, n});
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      for (Index c = 0; c < n; ++c) t.at({a, b, c}) = double(a + b + c + 3);
  const TTVector v = tt_svd(t, RankVector::unbounded(3), 0.0);
  const double err_max = max_abs_diff(tt_to_dense(v).data(), t.data());
  bool ranks_ok = true;
  const RankVector bound{1, 2, 2, 1};
  for (Index k = 0; k <= 3; ++k) ranks_ok = ranks_ok && v.ranks[k] <= bound[k];
  const bool pass = code == cli::kExitOk && ranks_ok && err_max <= 1e-10;
  return {pass, fmt("ranks (%zu,%zu,%zu,%zu), max error %.2e, demo exit %d", v.ranks[0], v.ranks[1],
                    v.ranks[2], v.ranks[3], err_max, code)};
}

Outcome oracle_criterion() {
  struct Case {
    Shape in, out;
    RankVector ranks;
  };
  std::vector<Case> cases{{Shape{4, 4, 2, 2}, Shape{4, 4, 4, 2}, RankVector::uniform(4, 8)},
                          {Shape{4, 4, 4, 4}, Shape{8, 4, 4, 4}, RankVector::uniform(4, 8)},
                          {Shape{4, 4, 2, 2}, Shape{4, 4, 4, 2}, RankVector::uniform(4, 2)},
                          {Shape{4, 4, 4, 4}, Shape{8, 4, 4, 4}, RankVector::uniform(4, 4)}};
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<Index> order(1, 5), dim(1, 5), rank(1, 6);
  while (cases.size() < 24) {
    const Index k = order(rng);
    std::vector<Index> in(k), out(k), r(k + 1, 1);
    for (Index i = 0; i < k; ++i) {
      in[i] = dim(rng);
      out[i] = dim(rng);
    }
    for (Index i = 1; i < k; ++i) r[i] = rank(rng);
    cases.push_back({Shape(in), Shape(out), RankVector(r)});
  }
  double worst = 0.0;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const Activation act = c % 2 ? Activation::relu : Activation::identity;
    const TTLinearLayer l = biased_layer(cases[c].in, cases[c].out, cases[c].ranks, 100 + c, act);
    const DenseTensor x = random_tensor(Shape{3, cases[c].in.numel()}, 500 + c);
    worst = std::max(worst, rel_norm(tt_forward(l, x), dense_oracle(l, x)));
  }
  return {worst <= 1e-6, fmt("%zu configs, worst relative error %.2e (tol 1e-6)", cases.size(), worst)};
}

Outcome gradient_criterion() {
  std::vector<std::pair<std::string, double>> checks;
  {
    TTDense tt(biased_layer(Shape{2, 3, 2}, Shape{3, 2, 2}, RankVector{1, 3, 2, 1}, 11, Activation::identity));
    checks.emplace_back("tt_dense", check_layer_gradients(tt, random_tensor(Shape{3, 12}, 12), 13).worst);
    TTDense hidden(biased_layer(Shape{4, 4, 2, 2}, Shape{4, 4, 4, 2}, RankVector{1, 2, 2, 2, 1}, 14,
                               Activation::identity));
    checks.emplace_back("tt_dense 64->128",
                        check_layer_gradients(hidden, random_tensor(Shape{2, 64}, 15), 16).worst);
  }
  {
    Conv1d conv(2, 3, 5, 2, 21);
    checks.emplace_back("conv1d", check_layer_gradients(conv, random_tensor(Shape{2, 2, 17}, 22), 23).worst);
  }
  {
    BatchNorm1d bn(3);
    bn.gamma = random_tensor(Shape{3}, 31, 0.5, 1.5);
    bn.beta = random_tensor(Shape{3}, 32);
    checks.emplace_back("batchnorm1d", check_layer_gradients(bn, random_tensor(Shape{4, 3, 5}, 33), 34).worst);
  }
  {
    DenseTensor logits = random_tensor(Shape{4, 7}, 41, -3.0, 3.0);
    const std::vector<Index> labels{0, 3, 6, 3};
    const DenseTensor g = softmax_cross_entropy(logits, labels).grad;
    const auto f = [&] { return softmax_cross_entropy(logits, labels).loss; };
    checks.emplace_back("softmax_ce",
                        ttk::testing::rel_error(g.data(), ttk::testing::numeric_gradient(logits.data(), f, 1e-5)));
  }
  {
    Model tiny = build_model(ttk::testing::tiny_tt_config());
    const std::vector<Index> labels{1, 5};
    checks.emplace_back("tiny model",
                        check_model_gradients(tiny, random_tensor(Shape{2, 1, 256}, 51), labels).worst);
  }
  std::string detail;
  double worst = 0.0;
  for (const auto& [name, e] : checks) {
    worst = std::max(worst, e);
    detail += fmt("%s%s %.1e", detail.empty() ? "" : ", ", name.c_str(), e);
  }
  return {worst <= 1e-3, detail + " (tol 1e-3)"};
}

std::vector<ClipRecord> synth(Index classes, Index per_class, Index len, std::uint64_t seed) {
  return synth_dataset(classes, per_class, len, seed);
}

Outcome conversion_criterion() {
  ModelConfig cfg = ModelConfig::for_head(HeadKind::dense);
  cfg.seed = 4;
  TrainState state(build_model(cfg), AdamConfig{}, 4);
  TrainOptions opt;
  opt.epochs = 3;
  opt.batch_size = 35;
  const auto data = synth(35, 1, 8000, 4);
  train(state, data, {}, opt);
  cli::ConversionResult conv = cli::convert_head(state.model, cli::ConvertMethod::tt, 0);
  const double before = evaluate(state.model, data).ce;
  const double after = evaluate(conv.model, data).ce;
  const double delta = std::abs(before - after);
  return {delta <= 1e-6, fmt("CE %.10f -> %.10f, |delta| %.2e (tol 1e-6)", before, after, delta)};
}

Outcome parameter_criterion() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<Index> order(1, 5), dim(1, 8), rank(1, 9);
  int exact = 0;
  for (int t = 0; t < 50; ++t) {
    const Index k = order(rng);
    std::vector<Index> in(k), out(k), r(k + 1, 1);
    for (Index i = 0; i < k; ++i) {
      in[i] = dim(rng);
      out[i] = dim(rng);
    }
    for (Index i = 1; i < k; ++i) r[i] = rank(rng);
    Index expected = 0;
    for (Index i = 0; i < k; ++i) expected += out[i] * in[i] * r[i] * r[i + 1];
    const TTLinearLayer l = tt_layer_random(Shape(in), Shape(out), RankVector(r), t);
    if (tt_param_count(Shape(in), Shape(out), RankVector(r)) == expected && tt_param_count(l.weights) == expected)
      ++exact;
  }
  Model dense = build_model(ModelConfig::for_head(HeadKind::dense));
  const Index total = count_parameters(dense).total;
  const double dev = std::abs(double(total) - 216000.0) / 216000.0;
  const Index tt704 = tt_param_count(Shape{4, 4, 4, 4}, Shape{8, 4, 4, 4}, RankVector::uniform(4, 4));
  const Index dense_w = dense_param_count(512, 256);
  const bool pass = exact == 50 && dev <= 0.10 && tt704 == 704 && dense_w == 131072;
  return {pass, fmt("formula exact %d/50, dense model %zu (%.1f%% from 0.216 M), 256->512 rank 4: %zu vs %zu (%.0fx)",
                    exact, total, 100.0 * dev, tt704, dense_w, double(dense_w) / double(tt704))};
}

// Trains from random init on the synthetic overfit set; train accuracy comes
// from evaluate() on the training records.
struct OverfitRun {
  std::vector<EpochMetrics> history;
  double best_acc = 0.0;
  long long first_95 = -1;
};

OverfitRun overfit(HeadKind head, Index rank, Index max_epochs, const std::function<bool(const TrainState&)>& stop) {
  ModelConfig cfg = ModelConfig::for_head(head, rank);
  cfg.seed = 0;
  TrainState state(build_model(cfg), AdamConfig{}, 0);
  const auto data = synth(35, 4, 8000, 0);
  TrainOptions opt;
  opt.epochs = 1;
  opt.batch_size = 256;
  OverfitRun run;
  while (Index(state.history.size()) < max_epochs) {
    train(state, data, {}, opt);
    const EpochMetrics& m = state.history.back();
    run.best_acc = std::max(run.best_acc, m.val_acc);
    if (run.first_95 < 0 && m.val_acc >= 95.0) run.first_95 = (long long)m.epoch;
    if (stop && stop(state)) break;
  }
  run.history = state.history;
  return run;
}

Outcome training_criterion() {
  double ce0 = 0.0;
  const auto done = [&](const TrainState& s) {
    ce0 = s.history.front().train_ce;
    const EpochMetrics& m = s.history.back();
    return m.val_acc >= 95.0 && m.train_ce <= 0.1 * ce0;
  };
  const OverfitRun run = overfit(HeadKind::tt_1, 8, 200, done);
  const EpochMetrics& last = run.history.back();
  const bool pass = last.val_acc >= 95.0 && last.train_ce <= 0.1 * ce0;
  return {pass, fmt("epoch %zu: train acc %.2f%%, CE %.4f vs epoch-0 %.4f (%.1f%% reduction)", last.epoch,
                    last.val_acc, last.train_ce, ce0, 100.0 * (1.0 - last.train_ce / ce0))};
}

Outcome tucker_criterion() {
  // full-rank round trip on the widest hidden layer
  const ModelConfig base = ModelConfig::for_head(HeadKind::dense);
  const Shape in = base.tucker_in_dims(3), out = base.tucker_out_dims(3);
  const Matrix w = ttk::testing::random_matrix(out.numel(), in.numel(), 91);
  const TuckerRanks full{out[0], out[1], in[0], in[1]};
  const double rt = max_abs_diff(tucker_reconstruct(hosvd(w, in, out, full)).data(), w.data());

  // truncated count against the formula
  const TuckerRanks cut{5, 3, 4, 2};
  const TuckerMatrix t = hosvd(w, in, out, cut);
  const Shape md = t.mode_dims();
  Index expected = cut[0] * cut[1] * cut[2] * cut[3];
  for (Index k = 0; k < 4; ++k) expected += md[k] * cut[k];
  const bool count_ok = tucker_param_count(t) == expected && tucker_param_count(md, cut) == expected;

  // matched budgets: TT rank 8 vs Tucker cap 7, same epochs from random init
  Model tt_model = build_model(ModelConfig::for_head(HeadKind::tt_1, 8));
  Model tk_model = build_model(ModelConfig::for_head(HeadKind::tucker, 7));
  const Index tt_params = count_parameters(tt_model).total, tk_params = count_parameters(tk_model).total;
  const Index epochs = 60;
  const OverfitRun a = overfit(HeadKind::tt_1, 8, epochs, {});
  const OverfitRun b = overfit(HeadKind::tucker, 7, epochs, {});
  const bool pass = rt <= 1e-10 && count_ok && a.best_acc >= b.best_acc;
  return {pass,
          fmt("round trip %.1e, count %s; %d epochs: TT %zu params best %.2f%% (95%% at epoch %lld), "
              "Tucker %zu params best %.2f%% (95%% at epoch %lld)",
              rt, count_ok ? "exact" : "WRONG", int(epochs), tt_params, a.best_acc, a.first_95,
              tk_params, b.best_acc, b.first_95)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism_criterion() {
  ttk::testing::TempDir dir("acceptance");
  std::string ckpt[2], csv[2];
  for (int i = 0; i < 2; ++i) {
    const auto out = dir.path() / ("run" + std::to_string(i) + ".ttk");
    std::ostringstream o, e;
    const int code = cli::run_cli({"train", "--synthetic", "--classes", "6", "--clips-per-class", "2",
                                   "--clip-len", "6848", "--head", "tt_1", "--rank", "4", "--epochs", "3",
                                   "--batch", "4", "--seed", "11", "--out", out.string()},
                                  o, e);
    if (code != cli::kExitOk) return {false, "train exited " + std::to_string(code) + ": " + e.str()};
    ckpt[i] = slurp(out);
    csv[i] = slurp(out.string() + ".metrics.csv");
  }
  const bool pass = !ckpt[0].empty() && ckpt[0] == ckpt[1] && csv[0] == csv[1];
  return {pass, fmt("checkpoint %zu bytes %s, metrics log %s", ckpt[0].size(),
                    ckpt[0] == ckpt[1] ? "identical" : "DIFFER", csv[0] == csv[1] ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  report(1, "worked example", 1, demo_criterion);
  report(2, "TT layer oracle", 10, oracle_criterion);
  report(3, "gradient checks", 60, gradient_criterion);
  report(4, "full-rank conversion", 30, conversion_criterion);
  report(5, "parameter arithmetic", 60, parameter_criterion);
  report(6, "synthetic training", 300, training_criterion);
  report(7, "Tucker baseline", 600, tucker_criterion);
  report(8, "determinism", 120, determinism_criterion);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
