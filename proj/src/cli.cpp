#include "ldprec/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>

#include "ldprec/audit.hpp"
#include "ldprec/error.hpp"
#include "ldprec/random.hpp"

namespace ldprec {
namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (k) out += sep;
    out += parts[k];
  }
  return out;
}

std::string method_name(MechanismKind m, PredictorKind p) {
  return std::string(to_string(m)) + "+" + std::string(to_string(p));
}

// Writes to `fallback` when the path is empty or "-".
class OutputTarget {
 public:
  OutputTarget(const std::filesystem::path& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw DataError("cannot open " + path.string() + " for writing");
      stream_ = &file_;
    }
  }
  std::ostream& get() { return *stream_; }
  void finish() {
    stream_->flush();
    if (!*stream_) throw DataError("failed writing output");
  }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::vector<double> quartiles(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto at = [&](double q) { return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))]; };
  return {at(0.25), at(0.75)};
}

int cmd_noise_dist(const std::string& dataset, const std::filesystem::path& path,
                   const std::vector<double>& epsilons, std::size_t samples, std::uint64_t seed,
                   const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
  const auto data = load_dataset(DatasetSpec::named(dataset, path));
  const RatingDomain& domain = data.ratings.domain();
  const auto marginal = rank_marginal(data.ratings);
  OutputTarget target(out_path, out);
  auto& csv = target.get();
  csv << "epsilon,interval,lower,upper,theoretical,blp_empirical,laplace_empirical,tv_blp,"
         "iqr_blp\n";
  for (double eps : epsilons) {
    const auto blp = Perturber::calibrated(MechanismKind::kBlp, domain, eps);
    const auto lap = Perturber::calibrated(MechanismKind::kLaplace, domain, eps);
    const auto table = noise_distribution(domain, marginal, blp.scale());
    const auto blp_noise = sample_noise(blp, marginal, samples, derive_seed(seed, streams::kNoise, 0));
    const auto lap_noise = sample_noise(lap, marginal, samples, derive_seed(seed, streams::kNoise, 1));
    const auto blp_hist = noise_histogram(blp_noise, table);
    const auto lap_hist = noise_histogram(lap_noise, table);
    const double tv = total_variation(table.probabilities, blp_hist);
    const auto q = quartiles(blp_noise);
    const double iqr = q[1] - q[0];
    for (std::size_t k = 0; k < table.size(); ++k) {
      csv << format_double(eps) << ',' << k << ',' << format_double(table.lower(k)) << ','
          << format_double(table.upper(k)) << ',' << format_double(table.probabilities[k]) << ','
          << format_double(blp_hist[k]) << ',' << format_double(lap_hist[k]) << ','
          << format_double(tv) << ',' << format_double(iqr) << '\n';
    }
    double lap_inside = 0.0;
    for (double p : lap_hist) lap_inside += p;
    err << "noise-dist epsilon=" << eps << " scale=" << blp.scale() << " tv=" << tv
        << " iqr=" << iqr << " laplace_outside=" << 1.0 - lap_inside << '\n';
  }
  target.finish();
  return 0;
}

int cmd_audit(const std::string& mechanism, const std::string& dataset, std::optional<double> lower,
              std::optional<double> upper, double step, double epsilon, double scale_factor,
              const AuditOptions& options, std::uint64_t seed, std::ostream& out) {
  RatingDomain domain = DatasetSpec::named(dataset, {}).domain;
  if (lower || upper) {
    if (!lower || !upper) throw ConfigError("--lower and --upper go together");
    domain = RatingDomain::with_ranks(*lower, *upper, step);
  }
  if (!domain.has_ranks()) throw ConfigError("audit needs a rank grid; pass --step");
  const MechanismKind kind = parse_mechanism(mechanism);
  if (kind == MechanismKind::kNone) throw ConfigError("nothing to audit for mechanism none");
  Perturber perturber = Perturber::calibrated(kind, domain, epsilon);
  if (scale_factor != 1.0) {
    if (!(scale_factor > 0.0)) throw ConfigError("scale factor must be positive");
    perturber = Perturber::with_scale(kind, domain, perturber.scale() * scale_factor);
  }
  const auto report = ldp_audit(perturber, epsilon, options, seed);
  out << report.to_text();
  return 0;
}

int cmd_comm(const std::string& dataset, const std::filesystem::path& path, std::size_t latent_dim,
             std::size_t value_bytes, std::size_t folds, std::uint64_t seed, std::ostream& out) {
  const auto data = load_dataset(DatasetSpec::named(dataset, path));
  const auto plan = make_folds(data.ratings, folds, seed);
  const std::size_t train = plan.train_positions(0).size();
  const auto rows = compare_communication({data.ratings.items(), train, latent_dim, value_bytes});
  out << "method,user_to_sp,sp_to_user,modeled_bytes_per_iteration,modeled_mib_per_iteration,note\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.user_to_sp << ',' << r.sp_to_user << ',';
    if (r.modeled_bytes_per_iteration) {
      out << format_double(*r.modeled_bytes_per_iteration) << ','
          << format_double(*r.modeled_bytes_per_iteration / (1024.0 * 1024.0));
    } else {
      out << "0,0";
    }
    out << ',' << r.note << '\n';
  }
  out << "# fold-0 training entries " << train << " -> user_to_sp_payload " << train
      << " rating-units, sp_to_user_payload 0\n";
  return 0;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void ExperimentConfig::validate() const {
  if (mechanisms.empty() || predictors.empty()) throw ConfigError("empty mechanism or predictor list");
  if (epsilons.empty()) throw ConfigError("no epsilon values given");
  for (double e : epsilons) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ConfigError("epsilon must be positive");
    if (!allow_any_epsilon && (e < 0.1 || e > 3.0)) {
      throw ConfigError("epsilon " + format_double(e) +
                        " outside [0.1, 3]; pass --allow-any-epsilon to override");
    }
  }
  for (auto m : mechanisms) {
    if (m == MechanismKind::kLaplace) {
      throw ConfigError("plain laplace leaves the rating domain; use blp, laplace-clamp or none");
    }
  }
  if (folds < 2) throw ConfigError("need at least 2 folds");
  for (auto f : only_folds) {
    if (f >= folds) throw ConfigError("fold " + std::to_string(f) + " out of range");
  }
  if (subsample && !(*subsample > 0.0 && *subsample <= 1.0)) {
    throw ConfigError("subsample fraction must lie in (0, 1]");
  }
  if (components < 1 || latent_dim < 1 || top_k < 1) throw ConfigError("K, d and top-k must be positive");
}

std::filesystem::path ExperimentConfig::resolved_data_path() const {
  if (!data_path.empty()) return data_path;
  if (dataset == "movielens") return "data/ml-100k/u.data";
  if (dataset == "jester") return "data/jester/jester.csv";
  if (dataset == "libimseti") return "data/libimseti/ratings.dat";
  throw ConfigError("--data-path is required for dataset '" + dataset + "'");
}

std::string ExperimentConfig::provenance() const {
  std::vector<std::string> kv{
      "dataset=" + dataset,
      "subsample=" + (subsample ? format_double(*subsample) : std::string("1")),
      "folds=" + std::to_string(folds),
      "k=" + std::to_string(components),
      "d=" + std::to_string(latent_dim),
      "max_iters=" + std::to_string(max_iters),
      "tol=" + format_double(tol),
      "mog_ridge=" + format_double(mog_ridge),
      "sgd_ridge=" + format_double(sgd_ridge),
      "lr=" + format_double(learning_rate),
      "epochs=" + std::to_string(epochs),
      "fill=" + std::string(to_string(fill)),
      "center=" + std::string(center ? "1" : "0"),
      "clip=" + std::string(clip_predictions ? "1" : "0"),
      "top_k=" + std::to_string(top_k),
      "seed=" + std::to_string(seed),
  };
  return join(kv, ";");
}

LoadedDataset load_experiment_data(const ExperimentConfig& config) {
  auto data = load_dataset(DatasetSpec::named(config.dataset, config.resolved_data_path()));
  if (config.subsample && *config.subsample < 1.0) {
    data.ratings = subsample(data.ratings, SubsampleSpec{config.subsample, std::nullopt}, config.seed);
    data.notes.push_back("subsampled to " + std::to_string(data.ratings.size()) + " entries");
  }
  return data;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const LoadedDataset& data,
                                std::ostream* progress) {
  config.validate();
  const SparseRatingMatrix& ratings = data.ratings;
  const FoldPlan plan = make_folds(ratings, config.folds, config.seed);

  ExperimentReport report;
  report.dataset = config.dataset;
  report.dataset_sha256 = data.sha256;
  report.entries = ratings.size();
  report.relevance_threshold =
      config.relevance_threshold.value_or(default_relevance_threshold(ratings.domain()));
  report.config = config;
  report.notes = data.notes;

  PipelineConfig base;
  base.mog.components = config.components;
  base.mog.latent_dim = config.latent_dim;
  base.mog.max_iters = config.max_iters;
  base.mog.tol = config.tol;
  base.mog.ridge = config.mog_ridge;
  base.sgd.latent_dim = config.latent_dim;
  base.sgd.learning_rate = config.learning_rate;
  base.sgd.epochs = config.epochs;
  base.sgd.ridge = config.sgd_ridge;
  base.fill = config.fill;
  base.center = config.center;
  base.clip_predictions = config.clip_predictions;
  base.relevance_threshold = report.relevance_threshold;
  base.top_k = config.top_k;
  base.seed = config.seed;

  for (auto mech : config.mechanisms) {
    for (auto pred : config.predictors) {
      std::vector<std::optional<double>> grid;
      if (mech == MechanismKind::kNone) {
        grid.push_back(std::nullopt);
      } else {
        grid.assign(config.epsilons.begin(), config.epsilons.end());
      }
      for (const auto& eps : grid) {
        PipelineConfig pc = base;
        pc.mechanism = mech;
        pc.predictor = pred;
        pc.epsilon = eps.value_or(1.0);
        auto result = run_private_pipeline(ratings, plan, pc, config.only_folds);
        for (auto& fold : result.folds) {
          if (progress) {
            *progress << "[run] " << method_name(mech, pred) << " epsilon="
                      << (eps ? format_double(*eps) : "inf") << " fold=" << fold.fold
                      << " rmse=" << fold.rmse << " f=" << fold.retrieval.f_score << '\n';
          }
          report.rows.push_back({method_name(mech, pred), mech, pred, eps, std::move(fold)});
        }
        report.ledger += result.ledger;
      }
    }
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream* progress) {
  config.validate();
  return run_experiment(config, load_experiment_data(config), progress);
}

void write_report_csv(const ExperimentReport& report, std::ostream& out) {
  const bool timing = report.config.timing;
  out << "method,dataset,mechanism,predictor,epsilon,fold,rmse,f_score,precision,recall,seed";
  if (timing) out << ",wall_time";
  out << ",scale,train_entries,test_entries,cold_start,iterations,reinitializations,"
         "recall_undefined,user_to_sp_payload,sp_to_user_payload,clip_predictions,"
         "relevance_threshold,dataset_sha256,config\n";
  const std::string provenance = report.config.provenance();
  for (const auto& row : report.rows) {
    const FoldResult& r = row.result;
    out << row.method << ',' << report.dataset << ',' << to_string(row.mechanism) << ','
        << to_string(row.predictor) << ',' << (row.epsilon ? format_double(*row.epsilon) : "inf")
        << ',' << r.fold << ',' << format_double(r.rmse) << ','
        << format_double(r.retrieval.f_score) << ',' << format_double(r.retrieval.precision) << ','
        << format_double(r.retrieval.recall) << ',' << report.config.seed;
    if (timing) out << ',' << format_double(r.wall_seconds);
    out << ',' << format_double(r.scale) << ',' << r.train_entries << ',' << r.test_entries << ','
        << r.cold_start << ',' << r.iterations << ',' << r.reinitializations << ','
        << (r.retrieval.recall_undefined ? 1 : 0) << ',' << r.ledger.user_to_sp_payload << ','
        << r.ledger.sp_to_user_payload << ',' << (report.config.clip_predictions ? 1 : 0) << ','
        << format_double(report.relevance_threshold) << ',' << report.dataset_sha256 << ','
        << provenance << '\n';
  }
}

namespace {

struct CliState {
  ExperimentConfig cfg;
  std::string config_file;
  std::vector<std::string> mechanisms{"blp"};
  std::vector<std::string> predictors{"mog-mf"};
  std::string fill = "global";
  bool no_center = false;

  std::string nd_dataset = "movielens";
  std::filesystem::path nd_path;
  std::vector<double> nd_eps{0.1, 1.0};
  std::size_t nd_samples = 100000;
  std::uint64_t nd_seed = 1;
  std::filesystem::path nd_out;

  std::string au_mech = "blp";
  std::string au_dataset = "movielens";
  std::optional<double> au_lower;
  std::optional<double> au_upper;
  double au_step = 0.5;
  double au_eps = 1.0;
  double au_factor = 1.0;
  std::uint64_t au_seed = 1;
  AuditOptions au_opts;

  std::string cm_dataset = "movielens";
  std::filesystem::path cm_path;
  std::size_t cm_dim = 20;
  std::size_t cm_bytes = 8;
  std::size_t cm_folds = 10;
  std::uint64_t cm_seed = 1;
};

struct CliApp {
  std::unique_ptr<CLI::App> app;
  CLI::App* run = nullptr;
  CLI::App* nd = nullptr;
  CLI::App* au = nullptr;
  CLI::App* cm = nullptr;
};

CliApp build_app(CliState& s) {
  CliApp c;
  c.app = std::make_unique<CLI::App>(
      "Locally private rating perturbation and MoG matrix factorization experiments");
  c.app->require_subcommand(1);
  ExperimentConfig& cfg = s.cfg;

  auto* run = c.run = c.app->add_subcommand("run", "Run an experiment grid and write a CSV report");
  run->add_option("--config", s.config_file,
                  "key=value file using the long flag names; flags given on the command line win");
  run->add_option("--dataset", cfg.dataset, "movielens, jester, libimseti or canonical");
  run->add_option("--data-path", cfg.data_path, "Rating file");
  run->add_option("--mechanism", s.mechanisms, "blp, laplace-clamp or none (repeatable)");
  run->add_option("--predictor", s.predictors, "mog-mf, mf or svd (repeatable)");
  run->add_option("--epsilon", cfg.epsilons, "Privacy budget (repeatable)");
  run->add_flag("--allow-any-epsilon", cfg.allow_any_epsilon, "Accept epsilon outside [0.1, 3]");
  run->add_option("--folds", cfg.folds, "Cross-validation folds");
  run->add_option("--only-fold", cfg.only_folds, "Evaluate only these folds (repeatable)");
  run->add_option("--k-components", cfg.components, "Mixture components K");
  run->add_option("--latent-dim", cfg.latent_dim, "Latent dimension d");
  run->add_option("--max-iters", cfg.max_iters, "EM iteration cap");
  run->add_option("--tol", cfg.tol, "Relative change of U that stops EM");
  run->add_option("--mog-ridge", cfg.mog_ridge, "Weight-scaled ridge for MoG-MF");
  run->add_option("--sgd-ridge", cfg.sgd_ridge, "L2 shrinkage for SGD MF");
  run->add_option("--learning-rate", cfg.learning_rate, "SGD learning rate");
  run->add_option("--epochs", cfg.epochs, "SGD epochs");
  run->add_option("--fill", s.fill, "SVD imputation: global, user or item");
  run->add_flag("--no-center", s.no_center, "Fit MF and MoG-MF on uncentered uploads");
  run->add_option("--seed", cfg.seed, "Master seed");
  run->add_option("--subsample", cfg.subsample, "Fraction of ratings to keep");
  run->add_flag("--clip-predictions", cfg.clip_predictions, "Clip predictions to the rating domain");
  run->add_option("--relevance-threshold", cfg.relevance_threshold, "Rating counted as relevant");
  run->add_option("--top-k", cfg.top_k, "Recommendation list length");
  run->add_flag("--timing", cfg.timing, "Add a wall_time column (breaks byte-identical output)");
  run->add_option("--out", cfg.out, "CSV path; stdout when omitted");

  auto* nd = c.nd = c.app->add_subcommand("noise-dist", "Theoretical vs Monte Carlo noise distribution");
  nd->add_option("--dataset", s.nd_dataset);
  nd->add_option("--data-path", s.nd_path);
  nd->add_option("--epsilon", s.nd_eps, "Privacy budget (repeatable)");
  nd->add_option("--samples", s.nd_samples);
  nd->add_option("--seed", s.nd_seed);
  nd->add_option("--out", s.nd_out);

  auto* au = c.au = c.app->add_subcommand("audit", "Empirical LDP audit of a mechanism");
  au->add_option("--mechanism", s.au_mech, "blp, laplace-clamp or laplace");
  au->add_option("--dataset", s.au_dataset, "Take the rating domain from a named dataset");
  au->add_option("--lower", s.au_lower);
  au->add_option("--upper", s.au_upper);
  au->add_option("--step", s.au_step, "Rank step for --lower/--upper");
  au->add_option("--epsilon", s.au_eps);
  au->add_option("--scale-factor", s.au_factor, "Multiply the calibrated scale (0.5 breaks it)");
  au->add_option("--samples", s.au_opts.samples_per_input, "Samples per input rank");
  au->add_option("--bins", s.au_opts.bins);
  au->add_option("--slack", s.au_opts.slack);
  au->add_option("--seed", s.au_seed);

  auto* cm = c.cm = c.app->add_subcommand("comm", "Communication comparison table");
  cm->add_option("--dataset", s.cm_dataset);
  cm->add_option("--data-path", s.cm_path);
  cm->add_option("--latent-dim", s.cm_dim);
  cm->add_option("--value-bytes", s.cm_bytes);
  cm->add_option("--folds", s.cm_folds);
  cm->add_option("--seed", s.cm_seed);
  return c;
}

// Turns the config file into flags placed ahead of the command-line ones,
// skipping keys the command line already set.
std::vector<std::string> config_file_args(const std::string& file, CLI::App& run) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigINI().from_file(file);
  } catch (const CLI::FileError& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
  std::vector<std::string> args;
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;
    if (!item.parents.empty() && !(item.parents.size() == 1 && item.parents[0] == "run")) {
      throw ConfigError("config file: unexpected section for key '" + item.fullname() + "'");
    }
    std::string name = item.name;
    std::replace(name.begin(), name.end(), '_', '-');
    if (name == "config") throw ConfigError("config file: nested config is not supported");
    CLI::Option* opt = run.get_option_no_throw("--" + name);
    if (opt == nullptr) throw ConfigError("config file: unknown key '" + item.name + "'");
    if (opt->count() > 0) continue;
    if (item.inputs.empty()) {
      args.push_back("--" + name);
      continue;
    }
    for (const auto& v : item.inputs) args.push_back("--" + name + "=" + v);
  }
  return args;
}

int dispatch(CliState& s, CliApp& c, std::ostream& out, std::ostream& err) {
  const auto default_path = [](const std::string& dataset, const std::filesystem::path& given) {
    ExperimentConfig e;
    e.dataset = dataset;
    e.data_path = given;
    return e.resolved_data_path();
  };
  if (*c.run) {
    ExperimentConfig& cfg = s.cfg;
    cfg.mechanisms.clear();
    for (const auto& m : s.mechanisms) cfg.mechanisms.push_back(parse_mechanism(m));
    cfg.predictors.clear();
    for (const auto& p : s.predictors) cfg.predictors.push_back(parse_predictor(p));
    cfg.fill = parse_fill_strategy(s.fill);
    cfg.center = !s.no_center;
    cfg.validate();
    const auto report = run_experiment(cfg, &err);
    OutputTarget target(cfg.out, out);
    write_report_csv(report, target.get());
    target.finish();
    for (const auto& note : report.notes) err << "note: " << note << '\n';
    err << "ledger user_to_sp_payload=" << report.ledger.user_to_sp_payload
        << " sp_to_user_payload=" << report.ledger.sp_to_user_payload << '\n';
    return 0;
  }
  if (*c.nd) {
    return cmd_noise_dist(s.nd_dataset, default_path(s.nd_dataset, s.nd_path), s.nd_eps,
                          s.nd_samples, s.nd_seed, s.nd_out, out, err);
  }
  if (*c.au) {
    return cmd_audit(s.au_mech, s.au_dataset, s.au_lower, s.au_upper, s.au_step, s.au_eps,
                     s.au_factor, s.au_opts, s.au_seed, out);
  }
  if (*c.cm) {
    return cmd_comm(s.cm_dataset, default_path(s.cm_dataset, s.cm_path), s.cm_dim, s.cm_bytes,
                    s.cm_folds, s.cm_seed, out);
  }
  return 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  auto state = std::make_unique<CliState>();
  CliApp cli = build_app(*state);
  try {
    try {
      cli.app->parse(argc, argv);
      if (*cli.run && !state->config_file.empty()) {
        auto extra = config_file_args(state->config_file, *cli.run);
        std::vector<std::string> args;
        bool inserted = false;
        for (int k = 0; k < argc; ++k) {
          args.emplace_back(argv[k]);
          if (!inserted && k > 0 && args.back() == "run") {
            args.insert(args.end(), extra.begin(), extra.end());
            inserted = true;
          }
        }
        std::vector<const char*> ptrs;
        for (const auto& a : args) ptrs.push_back(a.c_str());
        state = std::make_unique<CliState>();
        cli = build_app(*state);
        cli.app->parse(static_cast<int>(ptrs.size()), ptrs.data());
      }
    } catch (const CLI::ParseError& e) {
      const int code = cli.app->exit(e, out, err);
      return code == 0 ? 0 : 1;
    }
    return dispatch(*state, cli, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace ldprec
