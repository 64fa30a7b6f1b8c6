#include "commands.hpp"

#include <cstdio>
#include <ostream>
#include <random>

#include "CLI11.hpp"
#include "checkpoint.hpp"
#include "convert.hpp"
#include "ttk/error.hpp"
#include "ttk/speechcmd.hpp"
#include "ttk/train.hpp"
#include "ttk/ttcore.hpp"

namespace ttk::cli {

namespace {

struct Options {
  std::string data;
  std::string test_root;
  bool synthetic = false;
  Index classes = 35;
  Index clips_per_class = 4;
  Index clip_len = kMaxClipSamples;
  bool honor_official_lists = false;
  std::string head = "dense";
  Index rank = 0;
  Index epochs = 100;
  Index batch = 256;
  double lr = 0.01;
  std::uint64_t seed = 0;
  std::string out;
  std::string checkpoint;
  std::string metrics;
  std::string method = "tt";
  std::string split = "test";
  Index size = 3;
  bool verify_cores = false;
};

template <typename... Args>
std::string format(const char* fmt, Args... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string s(static_cast<std::size_t>(n) + 1, '\0');
  std::snprintf(s.data(), s.size(), fmt, args...);
  s.pop_back();
  return s;
}

std::string join(std::span<const Index> v) {
  std::string s = "(";
  for (Index k = 0; k < v.size(); ++k) s += (k ? "," : "") + std::to_string(v[k]);
  return s + ")";
}

Split parse_split(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "validation") return Split::validation;
  return Split::test;
}

// Synthetic splits are independent draws; only the train draw uses the seed as is.
std::uint64_t synthetic_seed(std::uint64_t seed, Split split) {
  switch (split) {
    case Split::train: return seed;
    case Split::validation: return seed ^ 0x5851f42d4c957f2dULL;
    case Split::test: return seed ^ 0x14057b7ef767814fULL;
  }
  return seed;
}

std::vector<ClipRecord> load_split(const Options& o, Split split, Index& classes) {
  if (o.synthetic) {
    classes = o.classes;
    const Index per_class = split == Split::train ? o.clips_per_class : 1;
    return synth_dataset(o.classes, per_class, o.clip_len, synthetic_seed(o.seed, split));
  }
  if (o.data.empty()) throw DataError("no data source: pass --data <dir> or --synthetic");
  ScanOptions scan;
  scan.seed = o.seed;
  scan.honor_official_lists = o.honor_official_lists;
  scan.test_root = o.test_root;
  const Dataset ds = scan_dataset(o.data, scan);
  classes = ds.labels.size();
  std::vector<ClipRecord> records = select_split(ds.records, split);
  if (records.empty()) throw DataError(std::string("split '") + to_string(split) + "' is empty under " + o.data);
  load_all(records, o.data);
  return records;
}

int cmd_train(const Options& o, std::ostream& out) {
  Index classes = 0;
  const std::vector<ClipRecord> train_set = load_split(o, Split::train, classes);
  std::vector<ClipRecord> validation = load_split(o, Split::validation, classes);

  Model model;
  if (!o.checkpoint.empty()) {
    model = model_from_checkpoint(load_checkpoint(o.checkpoint));
    if (model.config().num_classes != classes) {
      throw DataError(format("checkpoint has %zu classes, data has %zu", model.config().num_classes, classes));
    }
  } else {
    ModelConfig cfg = ModelConfig::for_head(*parse_head_kind(o.head), o.rank);
    cfg.num_classes = classes;
    cfg.seed = o.seed;
    model = build_model(cfg);
  }

  AdamConfig adam;
  adam.lr = o.lr;
  TrainState state(std::move(model), adam, o.seed);
  TrainOptions options;
  options.epochs = o.epochs;
  options.batch_size = o.batch;
  options.eval_batch_size = o.batch;
  options.on_epoch = [&out](const EpochMetrics& m) {
    out << format("epoch %zu train_ce=%.6f val_ce=%.6f val_acc=%.2f\n", m.epoch, m.train_ce, m.val_ce, m.val_acc)
        << std::flush;
  };
  train(state, train_set, validation, options);

  const std::string metrics_path = o.metrics.empty() ? o.out + ".metrics.csv" : o.metrics;
  save_checkpoint(o.out, checkpoint_from_model(state.model, state.history));
  write_metrics_csv(metrics_path, state.history);
  out << "wrote " << o.out << " and " << metrics_path << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  Model model = model_from_checkpoint(load_checkpoint(o.checkpoint));
  Index classes = 0;
  const std::vector<ClipRecord> records = load_split(o, parse_split(o.split), classes);
  if (classes != model.config().num_classes) {
    throw DataError(format("checkpoint has %zu classes, data has %zu", model.config().num_classes, classes));
  }
  const EvalResult r = evaluate(model, records, o.batch);
  out << format("ce=%.8f acc=%.2f\n", r.ce, r.accuracy);
  return kExitOk;
}

int cmd_convert(const Options& o, std::ostream& out) {
  Model dense = model_from_checkpoint(load_checkpoint(o.checkpoint));
  const ConvertMethod method = o.method == "tucker" ? ConvertMethod::tucker : ConvertMethod::tt;
  ConversionResult result = convert_head(dense, method, o.rank);
  for (const LayerConversion& l : result.layers) {
    out << format("fc%zu ranks=%s rel_error=%.3e weights %zu -> %zu (%+lld)\n", l.layer, l.ranks.c_str(),
                  l.rel_error, l.params_before, l.params_after,
                  static_cast<long long>(l.params_after) - static_cast<long long>(l.params_before));
  }
  const Index before = count_parameters(dense).total;
  const Index after = count_parameters(result.model).total;
  out << format("model params %zu -> %zu (%+lld)\n", before, after,
                static_cast<long long>(after) - static_cast<long long>(before));
  save_checkpoint(o.out, checkpoint_from_model(result.model));
  out << "wrote " << o.out << "\n";
  return kExitOk;
}

int cmd_params(const Options& o, std::ostream& out) {
  Model model = o.checkpoint.empty()
                    ? build_model(ModelConfig::for_head(*parse_head_kind(o.head), o.rank))
                    : model_from_checkpoint(load_checkpoint(o.checkpoint));
  const ParamTable table = count_parameters(model);
  out << format("head %s\n", to_string(model.config().head_kind));
  for (const ParamRow& row : table.rows) {
    out << format("%-4s %-56s %10zu\n", row.layer.c_str(), row.description.c_str(), row.params);
  }
  Index hidden = 0;
  for (Index l = 0; l < model.config().fc_dims.size(); ++l) {
    hidden += model.layers()[model.head_begin() + 2 * l]->parameter_count();
  }
  out << format("hidden fc params %zu\n", hidden);
  out << format("total %zu params (%.4f Mb)\n", table.total, static_cast<double>(table.total) / 1e6);
  return kExitOk;
}

int cmd_demo(const Options& o, std::ostream& out) {
  const Index n = o.size;
  // Indices are shown 1-based, so entry (a,b,c) holds (a+1)+(b+1)+(c+1).
  DenseTensor w(Shape{n, n, n});
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b)
      for (Index c = 0; c < n; ++c) w.at({a, b, c}) = static_cast<double>(a + b + c + 3);

  const TTVector tt = tt_svd(w, RankVector::unbounded(3), 0.0);
  const double err = max_abs_diff(tt_to_dense(tt).data(), w.data());
  out << format("W(i1,i2,i3) = i1 + i2 + i3, size %zux%zux%zu\n", n, n, n);
  out << "ranks " << join(tt.ranks.values()) << "\n";
  out << format("max reconstruction error %.3e\n", err);
  for (Index k = 0; k < 3; ++k) {
    const DenseTensor& core = tt.cores[k];
    out << format("core %zu shape %s\n", k + 1, core.shape().to_string().c_str());
    for (Index i = 0; i < core.dim(0); ++i) {
      out << format("  [i%zu=%zu]", k + 1, i + 1);
      for (Index a = 0; a < core.dim(1); ++a) {
        out << " [";
        for (Index b = 0; b < core.dim(2); ++b) out << format(b ? " %+.6f" : "%+.6f", core.at({i, a, b}));
        out << "]";
      }
      out << "\n";
    }
  }

  bool ok = err <= 1e-10;
  for (Index k = 1; k + 1 < tt.ranks.values().size(); ++k) ok = ok && tt.ranks[k] <= 2;

  if (o.verify_cores) {
    std::mt19937_64 rng(o.seed);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    for (int t = 0; t < 10; ++t) {
      const std::vector<Index> idx{pick(rng), pick(rng), pick(rng)};
      const double expected = static_cast<double>(idx[0] + idx[1] + idx[2] + 3);
      // Closed-form cores: [i1 1] * [[1 0],[i2 1]] * [1 i3]^T
      const double i1 = static_cast<double>(idx[0] + 1), i2 = static_cast<double>(idx[1] + 1),
                   i3 = static_cast<double>(idx[2] + 1);
      const double closed = (i1 * 1.0 + 1.0 * i2) * 1.0 + (i1 * 0.0 + 1.0 * 1.0) * i3;
      const double got = tt_element(tt, idx);
      const bool pass = std::abs(got - expected) <= 1e-10 && closed == expected;
      ok = ok && pass;
      out << format("verify (%zu,%zu,%zu) tt=%.12f closed_form=%.1f expected=%.1f %s\n", idx[0] + 1, idx[1] + 1,
                    idx[2] + 1, got, closed, expected, pass ? "ok" : "FAIL");
    }
  }
  out << (ok ? "demo ok\n" : "demo FAILED\n");
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Tensor-train compressed speech command recognition"};
  app.name("ttk");
  app.require_subcommand(1);

  const std::vector<std::string> heads{"dense", "tt_1", "tt_2", "tucker"};
  auto add_data = [&](CLI::App* cmd) {
    auto* data = cmd->add_option("--data", o.data, "Speech Commands root directory");
    auto* synth = cmd->add_flag("--synthetic", o.synthetic, "use the built-in synthetic tone dataset");
    data->excludes(synth);
    cmd->add_option("--test-root", o.test_root, "separate test-set directory")->excludes(synth);
    cmd->add_flag("--honor-official-lists", o.honor_official_lists, "use validation_list.txt for validation");
    cmd->add_option("--classes", o.classes, "synthetic classes")->check(CLI::Range(2, 1000));
    cmd->add_option("--clips-per-class", o.clips_per_class, "synthetic train clips per class")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--clip-len", o.clip_len, "synthetic clip length in samples")->check(CLI::PositiveNumber);
  };
  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", o.seed, "random seed"); };
  auto add_model = [&](CLI::App* cmd) {
    cmd->add_option("--head", o.head, "hidden head kind")->check(CLI::IsMember(heads));
    cmd->add_option("--rank", o.rank, "interior TT rank / Tucker rank cap (0 = default)");
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  add_data(train_cmd);
  add_model(train_cmd);
  add_seed(train_cmd);
  train_cmd->add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", o.batch)->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", o.lr)->check(CLI::PositiveNumber);
  train_cmd->add_option("--out", o.out, "checkpoint path")->required();
  train_cmd->add_option("--checkpoint", o.checkpoint, "initial weights (fine-tuning)");
  train_cmd->add_option("--metrics", o.metrics, "metrics CSV path (default <out>.metrics.csv)");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_data(eval_cmd);
  add_seed(eval_cmd);
  eval_cmd->add_option("--checkpoint", o.checkpoint)->required();
  eval_cmd->add_option("--split", o.split)->check(CLI::IsMember({"train", "validation", "test"}));
  eval_cmd->add_option("--batch", o.batch)->check(CLI::PositiveNumber);

  CLI::App* convert_cmd = app.add_subcommand("convert", "convert a dense head to TT or Tucker");
  convert_cmd->add_option("--checkpoint", o.checkpoint)->required();
  convert_cmd->add_option("--method", o.method)->check(CLI::IsMember({"tt", "tucker"}));
  convert_cmd->add_option("--rank", o.rank, "rank cap (0 = full TT ranks / Tucker preset)");
  convert_cmd->add_option("--out", o.out)->required();
  add_seed(convert_cmd);

  CLI::App* params_cmd = app.add_subcommand("params", "print the parameter table");
  add_model(params_cmd);
  params_cmd->add_option("--checkpoint", o.checkpoint);
  add_seed(params_cmd);

  CLI::App* demo_cmd = app.add_subcommand("demo", "TT-SVD of the i1+i2+i3 tensor");
  demo_cmd->add_option("--size", o.size)->check(CLI::Range(2, 64));
  demo_cmd->add_flag("--verify-cores", o.verify_cores);
  add_seed(demo_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }
  if (train_cmd->parsed() && !o.synthetic && o.data.empty()) {
    err << "train: one of --data or --synthetic is required\n";
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    if (convert_cmd->parsed()) return cmd_convert(o, out);
    if (params_cmd->parsed()) return cmd_params(o, out);
    if (demo_cmd->parsed()) return cmd_demo(o, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ttk::cli
