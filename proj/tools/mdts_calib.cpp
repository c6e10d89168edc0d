#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mdts/dataset.hpp"
#include "mdts/error.hpp"
#include "mdts/fileio.hpp"
#include "mdts/metrics.hpp"
#include "mdts/pipeline.hpp"
#include "mdts/serialize.hpp"
#include "mdts/synth.hpp"
#include "mdts/theory.hpp"

namespace fs = std::filesystem;
using namespace mdts;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBound = 2;
constexpr int kExitIo = 3;

struct Common {
  std::string data;
  std::string out;
  std::string model;
  int bins = 20;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::pair<double, double> ParsePair(const std::string& text, const char* flag) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError(std::string(flag) + " expects LO,HI");
  double v[2];
  const std::string parts[2] = {text.substr(0, comma), text.substr(comma + 1)};
  for (int i = 0; i < 2; ++i) {
    const char* b = parts[i].data();
    const char* e = b + parts[i].size();
    auto [p, ec] = std::from_chars(b, e, v[i]);
    if (ec != std::errc() || p != e) throw UsageError(std::string(flag) + ": bad number '" + parts[i] + "'");
  }
  return {v[0], v[1]};
}

void WriteJson(const fs::path& path, const Json& j) { WriteFileAtomic(path, j.dump(2) + "\n"); }

fs::path Normalized(const fs::path& p) { return fs::weakly_canonical(fs::absolute(p)); }

fs::path DataDir(const std::string& data) {
  const fs::path p = Normalized(data);
  return fs::is_regular_file(p) ? p.parent_path() : p;
}

bool Inside(const fs::path& path, const fs::path& dir) {
  const auto rel = Normalized(path).lexically_relative(dir);
  return !rel.empty() && *rel.begin() != "..";
}

void RequireData(const Common& c) {
  if (c.data.empty()) throw UsageError("--data is required");
}

void RequireOut(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  if (!c.data.empty()) {
    const fs::path data_dir = DataDir(c.data);
    if (Normalized(c.out) == data_dir || Inside(c.out, data_dir)) {
      throw UsageError("--out must not point into the input dataset directory");
    }
  }
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + c.out + ": " + ec.message());
}

void RequireModel(const Common& c) {
  if (c.model.empty()) throw UsageError("--model is required");
  if (!fs::is_regular_file(c.model)) throw Error(ErrorCode::kMissingFile, c.model);
}

void CheckCompatible(const CalibrationModel& model, const MultiDomainDataset& data) {
  const int j = ModelNumClasses(model);
  const int p = ModelEmbeddingDim(model);
  if ((j != 0 && j != data.num_classes) || (p != 0 && p != data.embedding_dim)) {
    throw Error(ErrorCode::kDimensionMismatch,
                "model expects J=" + std::to_string(j) + ", p=" + std::to_string(p) +
                    "; dataset has J=" + std::to_string(data.num_classes) +
                    ", p=" + std::to_string(data.embedding_dim));
  }
}

CalibrationMap ConfidenceMap(const CalibrationModel& model) {
  return [&model](const DomainDataset& d, std::size_t i) {
    return std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, TemperatureModel>) {
            return Apply(m, d.logits_row(i)).confidence;
          } else if constexpr (std::is_same_v<M, MdtsModel>) {
            return m.Calibrate(d.logits_row(i), d.embedding_row(i)).confidence;
          } else {
            return ApplyBaseline(m, d.logits_row(i)).confidence;
          }
        },
        model);
  };
}

std::string Fmt(double v) { return FormatDouble(v); }

// InD evaluation half plus OOD domains, each as its own dataset.
struct EvalSets {
  MultiDomainDataset ind_cal;
  MultiDomainDataset ind_eval;
  MultiDomainDataset ood;
};

EvalSets Prepare(const Common& c) {
  const auto data = Load(c.data);
  auto split = SplitHalf(SelectSplit(data, SplitTag::kInd), c.split_seed);
  return {std::move(split.calibration), std::move(split.evaluation), SelectSplit(data, SplitTag::kOod)};
}

int CmdSynth(const Common& c, SynthConfig cfg, const std::string& c_range, const std::string& mode) {
  if (!c_range.empty()) std::tie(cfg.c_lo, cfg.c_hi) = ParsePair(c_range, "--c-range");
  try {
    cfg.embed_mode = ParseEmbedMode(mode);
  } catch (const Error& e) {
    throw UsageError(e.detail());
  }
  cfg.seed = c.seed;
  cfg.Validate();
  if (c.out.empty()) throw UsageError("--out is required");
  const auto result = Generate(cfg);
  Save(result.dataset, c.out);
  WriteJson(fs::path(c.out) / "ground_truth.json", ToJson(result.ground_truth));
  std::printf("%-10s %-5s %7s %10s\n", "domain", "split", "n", "c");
  for (std::size_t k = 0; k < result.dataset.domains.size(); ++k) {
    const auto& d = result.dataset.domains[k];
    std::printf("%-10s %-5s %7zu %10.6f\n", d.id.c_str(), ToString(d.split), d.size(),
                result.ground_truth[k].second);
  }
  return kExitOk;
}

int CmdFit(const Common& c, const FitRequest& request) {
  RequireData(c);
  fs::path model_path;
  if (!c.model.empty()) {
    model_path = c.model;
    if (Inside(model_path, DataDir(c.data))) {
      throw UsageError("--model must not point into the input dataset directory");
    }
  } else {
    RequireOut(c);
    model_path = fs::path(c.out) / "model.json";
  }
  const auto sets = Prepare(c);
  const auto outcome = FitCalibration(sets.ind_cal, request);
  SaveModel(outcome.model, model_path);
  if (const auto* m = std::get_if<MdtsModel>(&outcome.model)) {
    std::printf("%-10s %12s\n", "domain", "T_hat");
    for (const auto& [id, t] : m->per_domain_t()) std::printf("%-10s %12.6f\n", id.c_str(), t);
    std::printf("regressor: %s\n", m->regressor().spec().Describe().c_str());
  } else if (const auto* t = std::get_if<TemperatureModel>(&outcome.model)) {
    std::printf("pooled T: %.6f\n", t->temperature);
  }
  std::printf("model: %s\n", model_path.string().c_str());
  return kExitOk;
}

void PrintReport(const char* label, const MultiDomainReport& r) {
  std::printf("[%s] mdece %.6f  pooled ece %.6f\n", label, r.mdece, r.pooled.ece);
  for (const auto& [id, e] : r.per_domain) {
    std::printf("  %-10s ece %.6f  acc %.4f  conf %.4f  n %zu\n", id.c_str(), e.ece, e.mean_acc,
                e.mean_conf, e.n);
  }
}

int CmdEval(const Common& c, const std::vector<std::string>& reliability) {
  RequireData(c);
  RequireModel(c);
  RequireOut(c);
  const auto model = LoadModel(c.model);
  const auto sets = Prepare(c);
  CheckCompatible(model, sets.ind_eval);
  const fs::path out(c.out);
  const auto write_set = [&](const char* tag, const MultiDomainDataset& ds) {
    if (ds.domains.empty()) return;
    const auto report = EvaluatePredictions(ds, PredictAll(model, ds), c.bins);
    WriteJson(out / (std::string("report_") + tag + ".json"), ToJson(report));
    WriteFileAtomic(out / (std::string("reliability_") + tag + "_pooled.csv"), ReliabilityCsv(report.pooled));
    for (const auto& [id, r] : report.per_domain) {
      for (const auto& want : reliability) {
        if (want == id || want == "all") {
          WriteFileAtomic(out / ("reliability_" + id + ".csv"), ReliabilityCsv(r));
          break;
        }
      }
    }
    PrintReport(tag, report);
  };
  for (const auto& want : reliability) {
    if (want != "all" && !sets.ind_eval.Find(want) && !sets.ood.Find(want)) {
      throw UsageError("--reliability: unknown domain '" + want + "'");
    }
  }
  write_set("ind", sets.ind_eval);
  write_set("ood", sets.ood);
  return kExitOk;
}

int CmdAblate(const Common& c, const FitRequest& base) {
  RequireData(c);
  RequireOut(c);
  const auto sets = Prepare(c);
  TsOptions ts;
  ts.t_min = base.clamp.lo;
  ts.t_max = base.clamp.hi;
  std::vector<double> temps;
  for (const auto& m : FitPerDomainTs(sets.ind_cal, ts)) temps.push_back(m.temperature);
  std::ostringstream csv;
  csv << "regressor,hyperparams,ind_mdece,ood_mdece\n";
  std::printf("%-8s %-36s %12s %12s\n", "regressor", "selected", "ind_mdece", "ood_mdece");
  for (RegressorKind kind : {RegressorKind::kOls, RegressorKind::kRidge, RegressorKind::kHuber,
                             RegressorKind::kKrr, RegressorKind::kKnn}) {
    FitRequest req = base;
    req.method = Method::kMdts;
    req.regressor = kind;
    req.grid_search = true;
    const auto outcome = FitMdtsRequest(sets.ind_cal, temps, req);
    const auto& model = std::get<MdtsModel>(outcome.model);
    const double ind = EvaluatePredictions(sets.ind_eval, PredictAll(outcome.model, sets.ind_eval), c.bins).mdece;
    std::string ood = "";
    if (!sets.ood.domains.empty()) {
      ood = Fmt(EvaluatePredictions(sets.ood, PredictAll(outcome.model, sets.ood), c.bins).mdece);
    }
    const auto desc = model.regressor().spec().Describe();
    csv << ToString(kind) << ",\"" << desc << "\"," << Fmt(ind) << "," << ood << "\n";
    std::printf("%-8s %-36s %12.6f %12s\n", ToString(kind), desc.c_str(), ind, ood.c_str());
  }
  WriteFileAtomic(fs::path(c.out) / "ablation.csv", csv.str());
  return kExitOk;
}

Json MaeBlock(const MultiDomainReport& msp, const MultiDomainReport& ts, const MultiDomainReport& model,
              const std::string& model_name, const MultiDomainDataset& ds) {
  Json j;
  j["msp"] = AccuracyPredictionMae(msp.per_domain);
  j["ts"] = AccuracyPredictionMae(ts.per_domain);
  j[model_name] = AccuracyPredictionMae(model.per_domain);
  bool have_oracle = !ds.domains.empty();
  for (const auto& d : ds.domains) have_oracle = have_oracle && d.oracle_conf.has_value();
  if (have_oracle) {
    DomainReports oracle;
    for (const auto& d : ds.domains) {
      std::vector<std::uint8_t> correct(d.size());
      for (std::size_t i = 0; i < d.size(); ++i) correct[i] = Predict(d.logits_row(i)) == d.labels[i];
      oracle.emplace_back(d.id, Ece(*d.oracle_conf, correct, 1));
    }
    j["oracle"] = AccuracyPredictionMae(oracle);
  }
  return j;
}

int CmdPredictAcc(const Common& c, const std::string& ts_model_path) {
  RequireData(c);
  RequireModel(c);
  RequireOut(c);
  const auto model = LoadModel(c.model);
  const auto sets = Prepare(c);
  CheckCompatible(model, sets.ind_eval);
  CalibrationModel ts_model;
  if (!ts_model_path.empty()) {
    if (!fs::is_regular_file(ts_model_path)) throw Error(ErrorCode::kMissingFile, ts_model_path);
    ts_model = LoadModel(ts_model_path);
  } else {
    FitRequest req;
    req.method = Method::kTs;
    ts_model = FitCalibration(sets.ind_cal, req).model;
  }
  const std::string model_name = std::visit(
      [](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, TemperatureModel>) return "ts_model";
        else if constexpr (std::is_same_v<M, MdtsModel>) return "mdts";
        else if constexpr (std::is_same_v<M, HistogramBinningModel>) return "histbin";
        else return "isotonic";
      },
      model);
  std::ostringstream csv;
  csv << "domain,split,n,accuracy,msp,ts," << model_name << "\n";
  Json summary;
  for (const auto* ds : {&sets.ind_eval, &sets.ood}) {
    if (ds->domains.empty()) continue;
    const auto msp = EvaluatePredictions(*ds, PredictAllMsp(*ds), 1);
    const auto ts = EvaluatePredictions(*ds, PredictAll(ts_model, *ds), 1);
    const auto md = EvaluatePredictions(*ds, PredictAll(model, *ds), 1);
    const char* tag = ds == &sets.ind_eval ? "ind" : "ood";
    for (std::size_t k = 0; k < ds->domains.size(); ++k) {
      csv << ds->domains[k].id << "," << tag << "," << ds->domains[k].size() << ","
          << Fmt(msp.per_domain[k].second.mean_acc) << "," << Fmt(msp.per_domain[k].second.mean_conf) << ","
          << Fmt(ts.per_domain[k].second.mean_conf) << "," << Fmt(md.per_domain[k].second.mean_conf) << "\n";
    }
    summary[tag] = MaeBlock(msp, ts, md, model_name, *ds);
  }
  WriteFileAtomic(fs::path(c.out) / "predicted_accuracy.csv", csv.str());
  WriteJson(fs::path(c.out) / "accuracy_mae.json", summary);
  std::cout << summary.dump(2) << "\n";
  return kExitOk;
}

struct BoundFlags {
  double slack = 0.05;
  int temp_grid = 11;
  int threshold_grid = 21;
  int alpha_resolution = 10;
  std::string ood;
};

int CmdBoundCheck(const Common& c, const BoundFlags& f) {
  RequireData(c);
  RequireModel(c);
  RequireOut(c);
  if (!(f.slack >= 0.0)) throw UsageError("--slack must be nonnegative");
  const auto model = LoadModel(c.model);
  const auto sets = Prepare(c);
  CheckCompatible(model, sets.ind_eval);
  if (sets.ind_eval.domains.size() > 4) {
    throw Error(ErrorCode::kTooManyDomains, std::to_string(sets.ind_eval.domains.size()) + " > 4");
  }
  const DomainDataset* ood = nullptr;
  if (f.ood.empty()) {
    if (sets.ood.domains.empty()) throw UsageError("dataset has no OOD domain; pass --ood ID");
    ood = &sets.ood.domains.front();
  } else {
    ood = sets.ood.Find(f.ood);
    if (!ood) ood = sets.ind_eval.Find(f.ood);
    if (!ood) throw UsageError("--ood: unknown domain '" + f.ood + "'");
  }
  const auto family = HypothesisFamily::Grid(f.temp_grid, f.threshold_grid);
  const auto& ind = sets.ind_eval.domains;
  const auto alpha = OptimizeAlpha(ind, *ood, family, f.alpha_resolution);
  const auto report = CheckBound(ind, *ood, ConfidenceMap(model), family, alpha.weights, f.slack);
  WriteJson(fs::path(c.out) / "bound_report.json", ToJson(report));
  std::printf("lhs %.6f  rhs %.6f  (d_hbar %.6f, lambda %.6f, slack %g)  %s\n", report.lhs, report.rhs,
              report.d_hbar, report.lambda, report.slack, report.holds ? "holds" : "VIOLATED");
  return report.holds ? kExitOk : kExitBound;
}

void AddCommon(CLI::App* app, Common& c) {
  app->add_option("--data", c.data, "Dataset directory or manifest");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--model", c.model, "Model file");
  app->add_option("--bins", c.bins, "ECE bins")->check(CLI::PositiveNumber);
  app->add_option("--seed", c.seed, "Seed");
  app->add_option("--split-seed", c.split_seed, "Calibration/evaluation split seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-domain temperature scaling"};
  app.require_subcommand(1);
  Common common;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic multi-domain dataset");
  SynthConfig cfg;
  std::string c_range, embed_mode = "direct";
  AddCommon(synth, common);
  synth->add_option("--domains", cfg.num_domains);
  synth->add_option("--ood-domains", cfg.num_ood_domains);
  synth->add_option("--classes", cfg.num_classes);
  synth->add_option("--per-domain", cfg.per_domain);
  synth->add_option("--logit-scale", cfg.logit_scale);
  synth->add_option("--c-range", c_range, "LO,HI");
  synth->add_option("--embed-mode", embed_mode, "direct|mixed");
  synth->add_option("--embed-noise", cfg.embed_noise);
  synth->add_option("--mix-dim", cfg.mix_dim);

  FitRequest request;
  std::string method = "mdts", regressor = "ols", clamp;
  bool no_intercept = false;
  const auto add_fit_flags = [&](CLI::App* sub, bool with_method) {
    if (with_method) sub->add_option("--method", method, "ts|mdts|histbin|isotonic");
    if (with_method) sub->add_option("--regressor", regressor, "ols|ridge|huber|krr|knn");
    sub->add_flag("--no-intercept", no_intercept);
    if (with_method) sub->add_flag("--grid-search", request.grid_search);
    sub->add_option("--clamp", clamp, "LO,HI");
  };
  auto* fit = app.add_subcommand("fit", "Fit a calibrator on the InD calibration half");
  AddCommon(fit, common);
  add_fit_flags(fit, true);

  auto* eval = app.add_subcommand("eval", "Per-domain ECE reports");
  std::vector<std::string> reliability;
  AddCommon(eval, common);
  eval->add_option("--reliability", reliability, "Domain ids (or 'all') for reliability CSVs");

  auto* ablate = app.add_subcommand("ablate", "Grid-searched MD-TS with every regressor");
  AddCommon(ablate, common);
  add_fit_flags(ablate, false);

  auto* predict = app.add_subcommand("predict-acc", "Accuracy prediction from mean confidence");
  std::string ts_model;
  AddCommon(predict, common);
  predict->add_option("--ts-model", ts_model, "TS model to compare (fitted when omitted)");

  auto* bound = app.add_subcommand("bound-check", "Check the OOD risk bound");
  BoundFlags bf;
  AddCommon(bound, common);
  bound->add_option("--slack", bf.slack);
  bound->add_option("--temp-grid", bf.temp_grid)->check(CLI::PositiveNumber);
  bound->add_option("--threshold-grid", bf.threshold_grid)->check(CLI::PositiveNumber);
  bound->add_option("--alpha-resolution", bf.alpha_resolution);
  bound->add_option("--ood", bf.ood, "OOD domain id");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == fit || active == ablate) {
      request.regressor = ParseRegressorKind(regressor);
      request.method = ParseMethod(method);
      request.intercept = !no_intercept;
      request.bins = common.bins;
      if (!clamp.empty()) std::tie(request.clamp.lo, request.clamp.hi) = ParsePair(clamp, "--clamp");
    }
    if (active == synth) return CmdSynth(common, cfg, c_range, embed_mode);
    if (active == fit) return CmdFit(common, request);
    if (active == eval) return CmdEval(common, reliability);
    if (active == ablate) return CmdAblate(common, request);
    if (active == predict) return CmdPredictAcc(common, ts_model);
    return CmdBoundCheck(common, bf);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active->help();
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kMissingFile:
      case ErrorCode::kIoFailure:
        return kExitIo;
      case ErrorCode::kInvalidConfig:
      case ErrorCode::kInvalidArgument:
        std::cerr << "\n" << active->help();
        return kExitUsage;
      default:
        return kExitUsage;
    }
  }
}
