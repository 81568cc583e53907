// Command-line front end: synthetic data generation, knot prediction,
// free-knot spline fitting, beat-segmented compression, baselines,
// synthetic benchmarks, and plot-data emission.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "fks/baselines.hpp"
#include "fks/bspline.hpp"
#include "fks/foba.hpp"
#include "fks/metrics.hpp"
#include "fks/pipeline.hpp"
#include "fks/varpro.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fks::Norm parseNorm(const std::string& s) {
  if (s == "l1") return fks::Norm::L1;
  if (s == "l2") return fks::Norm::L2;
  if (s == "linf") return fks::Norm::LInf;
  throw CLI::ValidationError("--norm", "expected l1|l2|linf");
}

fks::JacobianMode parseJacobian(const std::string& s) {
  if (s == "full") return fks::JacobianMode::Full;
  if (s == "kaufman") return fks::JacobianMode::Kaufman;
  throw CLI::ValidationError("--jacobian", "expected full|kaufman");
}

fks::Signal loadSignal(const std::string& path, double fs, const std::string& annotationsPath) {
  try {
    fks::IngestOptions opts;
    opts.samplingRate = fs;
    fks::Signal sig = fks::ingestCsv(path, opts);
    if (!annotationsPath.empty())
      sig.annotations = fks::ingestAnnotations(annotationsPath, sig.size());
    return sig;
  } catch (const std::exception& e) {
    throw DataError(e.what());
  }
}

void writeText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file " + path);
  out << text;
}

struct CommonFitFlags {
  std::string input, annotations, out;
  std::string norm = "l2";
  std::string jacobian = "full";
  std::size_t knots = 25;
  bool autoKnots = false;
  double tau = 0.01;
  int degree = 3;
  std::size_t delta = 1;
  int maxIter = 4;
  double termTol = 0.1;
  double fs = 0.0;
  std::uint64_t seed = 0;
  bool normalize = true;

  void attach(CLI::App* cmd, bool withAnnotations) {
    cmd->add_option("--in", input, "input signal CSV (t,f rows or single f column)")->required();
    if (withAnnotations)
      cmd->add_option("--annotations", annotations, "annotation file, one sample index per line");
    cmd->add_option("--norm", norm, "FOBA norm: l1|l2|linf")->default_val("l2");
    cmd->add_option("--knots", knots, "total knot count n+1 (boundaries included)");
    cmd->add_flag("--auto-knots", autoKnots, "estimate the knot budget by the knee rule");
    cmd->add_option("--tau", tau, "knee-rule threshold")->default_val(0.01);
    cmd->add_option("--degree", degree, "spline degree")->default_val(3);
    cmd->add_option("--delta", delta, "minimum knot spacing in samples")->default_val(1);
    cmd->add_option("--max-iter", maxIter, "VP iteration budget")->default_val(4);
    cmd->add_option("--jacobian", jacobian, "full|kaufman")->default_val("full");
    cmd->add_option("--term-tol", termTol, "residual-based termination threshold")->default_val(0.1);
    cmd->add_option("--fs", fs, "sampling rate for single-column CSV");
    cmd->add_option("--seed", seed, "RNG seed recorded in reports")->default_val(0);
    cmd->add_flag("--normalize,!--no-normalize", normalize,
                  "amplitude-normalize before fitting (default on)");
    cmd->add_option("--out", out, "output path (default stdout)");
  }

  fks::CompressionJob toJob() const {
    fks::CompressionJob job;
    job.signalPath = input;
    job.annotationsPath = annotations;
    job.norm = parseNorm(norm);
    job.numKnots = knots;
    job.autoKnots = autoKnots;
    job.tau = tau;
    job.degree = degree;
    job.vpIters = maxIter;
    job.jacobian = parseJacobian(jacobian);
    job.delta = delta;
    job.termTol = termTol;
    job.samplingRate = fs;
    job.normalize = normalize;
    job.seed = seed;
    return job;
  }
};

int runSynth(const std::string& fn, std::size_t n, double noiseLo, double noiseHi,
             std::uint64_t seed, const std::string& out) {
  if (fn.size() != 2 || fn[0] != 'f') throw CLI::ValidationError("--fn", "expected f1..f6");
  int id = fn[1] - '0';
  auto [a, b] = fks::testFunctionDomain(id);
  fks::Signal sig = fks::sampleUniform([&](double x) { return fks::testFunction(id, x); }, a, b, n);
  if (noiseLo != 0.0 || noiseHi != 0.0) sig = fks::addNoise(sig, noiseLo, noiseHi, seed);
  std::ostringstream ss;
  ss.precision(17);
  for (std::size_t i = 0; i < sig.size(); ++i) ss << sig.x[i] << "," << sig.f[i] << "\n";
  writeText(out, ss.str());
  return kExitOk;
}

int runPredict(const CommonFitFlags& flags) {
  fks::Signal sig = loadSignal(flags.input, flags.fs, flags.annotations);
  if (flags.normalize) fks::normalizeAmplitude(sig);
  fks::Norm p = parseNorm(flags.norm);
  fks::KnotPrediction pred = fks::knotPred(sig, flags.knots, flags.delta, p);
  std::size_t budget = flags.autoKnots
                           ? std::min(fks::estimateKnotBudget(pred.errorCurve, flags.tau), flags.knots)
                           : flags.knots;
  fks::json out{{"norm", flags.norm},
                {"knots_requested", flags.knots},
                {"knots_suggested", budget},
                {"delta", flags.delta},
                {"interior_samples", pred.interiorSamples},
                {"error_curve", pred.errorCurve}};
  std::vector<double> xs;
  for (std::size_t s : pred.interiorSamples) xs.push_back(sig.x[s]);
  out["interior_knots"] = xs;
  writeText(flags.out, out.dump(2) + "\n");
  return kExitOk;
}

int runFit(const CommonFitFlags& flags) {
  fks::Signal sig = loadSignal(flags.input, flags.fs, "");
  fks::CompressionJob job = flags.toJob();
  fks::BeatSegment whole{0, sig.size(), 0};
  fks::SegmentResult res = fks::compressSegment(sig, whole, 0, job);
  if (res.skipped) throw DataError("fit failed: " + res.skipReason);
  fks::json out{{"job", fks::jobToJson(job)},
                {"model", fks::toJson(*res.model)},
                {"report",
                 fks::json{{"knots", res.numKnots},
                           {"foba_prdn", res.fobaPrdn},
                           {"prdn", res.prdn},
                           {"eps1", res.eps1},
                           {"eps_inf", res.epsInf},
                           {"rss", res.rss},
                           {"cr", res.cr},
                           {"vp_iterations", res.vpIterations}}}};
  writeText(flags.out, out.dump(2) + "\n");
  return kExitOk;
}

int runCompress(const CommonFitFlags& flags, const std::string& outDir, bool emitRecon,
                bool withTiming) {
  fks::Signal sig = loadSignal(flags.input, flags.fs, flags.annotations);
  fks::CompressionJob job = flags.toJob();
  job.outDir = outDir;
  std::filesystem::create_directories(outDir);
  fks::CompressionSummary sum = fks::compressSignal(sig, job);

  for (const auto& seg : sum.segments) {
    if (seg.skipped) continue;
    char name[64];
    std::snprintf(name, sizeof(name), "model_%04zu.json", seg.index);
    fks::json m = fks::toJson(*seg.model);
    m["segment"] = {{"start", seg.segment.start}, {"end", seg.segment.end}};
    writeText((std::filesystem::path(outDir) / name).string(), m.dump(2) + "\n");
    if (emitRecon) {
      std::snprintf(name, sizeof(name), "reconstruction_%04zu.csv", seg.index);
      std::ofstream rc(std::filesystem::path(outDir) / name);
      fks::emitPlotData(*seg.model, sig.slice(seg.segment.start, seg.segment.end), rc);
    }
  }
  fks::json summary = fks::summaryToJson(sum, job, withTiming);
  writeText((std::filesystem::path(outDir) / "summary.json").string(), summary.dump(2) + "\n");
  std::cout << "beats=" << sum.fittedBeats << " mean_prdn=" << sum.meanPrdn
            << " cr=" << sum.totalCr << "\n";
  return kExitOk;
}

int runBaseline(const CommonFitFlags& flags, const std::string& method) {
  fks::Signal sig = loadSignal(flags.input, flags.fs, "");
  if (flags.normalize) fks::normalizeAmplitude(sig);
  int n = static_cast<int>(flags.knots) - 1;
  fks::KnotVector knots = [&] {
    if (method == "kr")
      return fks::knotReduction(sig, flags.degree, flags.knots).knots;
    if (method == "uvp") return fks::uniformInit(sig.a(), sig.b(), n, flags.degree);
    if (method == "rvp")
      return fks::randomInit(sig.a(), sig.b(), n, flags.degree,
                             flags.delta * sig.spacing(), flags.seed);
    throw CLI::ValidationError("--method", "expected kr|uvp|rvp");
  }();

  fks::VpOptions opts;
  opts.maxIter = (method == "kr") ? 0 : flags.maxIter;
  opts.mode = parseJacobian(flags.jacobian);
  opts.termTol = flags.termTol;
  fks::VpResult vp = fks::vpOptimize(sig, knots, opts);
  fks::SplineModel model(vp.knots, std::vector<double>(vp.coeffs.data(),
                                                       vp.coeffs.data() + vp.coeffs.size()));
  std::vector<double> rec = fks::evalModel(model, sig.x);
  fks::ErrorReport rep = fks::errorReport(sig.f, rec, knots.numSpans(), flags.degree);
  fks::json out{{"method", method},
                {"seed", flags.seed},
                {"knots", flags.knots},
                {"report",
                 fks::json{{"rss", rep.rss},
                           {"mse", rep.mse},
                           {"prdn", rep.eps2},
                           {"bic", rep.bicDefined ? fks::json(rep.bic) : fks::json()},
                           {"vp_iterations", vp.iterations}}},
                {"model", fks::toJson(model)}};
  writeText(flags.out, out.dump(2) + "\n");
  return kExitOk;
}

int runBench(const std::string& suite, const std::string& titaniumPath,
             std::uint64_t seed, const std::string& out) {
  if (suite != "table2" && suite != "synthetic")
    throw CLI::ValidationError("--suite", "expected table2|synthetic");
  std::optional<fks::Signal> titanium;
  if (!titaniumPath.empty()) titanium = loadSignal(titaniumPath, 0.0, "");
  std::vector<fks::BenchResult> results;
  for (const auto& row : fks::table2Rows()) results.push_back(fks::runBenchRow(row, 3, seed, titanium));
  if (titanium) {
    fks::BenchRow f2rss{"f2", "RSS", titanium->size(), 9, fks::Norm::LInf, 20, 0, 0, 0.00209};
    fks::BenchRow f2bre{"f2", "BRE", titanium->size(), 7, fks::Norm::L1, 5, 0, 0, 0.01325};
    fks::BenchRow f2bre8{"f2", "BRE", titanium->size(), 8, fks::Norm::LInf, 6, 0, 0, 0.00874};
    for (const auto& r : {f2rss, f2bre, f2bre8}) results.push_back(fks::runBenchRow(r, 3, seed, titanium));
  }
  std::ostringstream ss;
  fks::emitBenchCsv(results, ss);
  writeText(out, ss.str());
  return kExitOk;
}

int runPlotData(const std::string& modelPath, const std::string& input, double fs,
                const std::string& out) {
  std::ifstream mf(modelPath);
  if (!mf) throw DataError("cannot open model file " + modelPath);
  fks::json mj = fks::json::parse(mf);
  fks::SplineModel model = fks::modelFromJson(mj.contains("model") ? mj["model"] : mj);
  fks::Signal sig = loadSignal(input, fs, "");
  std::ostringstream ss;
  fks::emitPlotData(model, sig, ss);
  writeText(out, ss.str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"free-knot B-spline fitting and signal compression toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic test signal");
  std::string synthFn = "f3", synthOut;
  std::size_t synthN = 201;
  double noiseLo = 0.0, noiseHi = 0.0;
  std::uint64_t synthSeed = 1;
  synth->add_option("--fn", synthFn, "test function f1..f6")->required();
  synth->add_option("--n", synthN, "sample count")->default_val(201);
  synth->add_option("--noise-lo", noiseLo, "uniform noise lower bound");
  synth->add_option("--noise-hi", noiseHi, "uniform noise upper bound");
  synth->add_option("--seed", synthSeed, "noise seed")->default_val(1);
  synth->add_option("--out", synthOut, "output CSV (default stdout)");

  // predict / fit / baseline share flags
  CommonFitFlags predictFlags, fitFlags, compressFlags, baselineFlags;
  auto* predict = app.add_subcommand("predict", "FOBA knot prediction only");
  predictFlags.attach(predict, false);
  auto* fit = app.add_subcommand("fit", "fit one free-knot spline to the whole signal");
  fitFlags.attach(fit, false);

  auto* compress = app.add_subcommand("compress", "beat-segmented compression pipeline");
  compressFlags.attach(compress, true);
  std::string compressDir = "fks-out";
  bool emitRecon = false, noTiming = false;
  compress->add_option("--out-dir", compressDir, "output directory")->default_val("fks-out");
  compress->add_flag("--emit-reconstruction", emitRecon, "write dense reconstruction CSVs");
  compress->add_flag("--no-timing", noTiming, "omit wall-clock fields from the summary");

  auto* baseline = app.add_subcommand("baseline", "KR / UVP / RVP comparison fits");
  baselineFlags.attach(baseline, false);
  std::string baselineMethod;
  baseline->add_option("--method", baselineMethod, "kr|uvp|rvp")->required();

  auto* bench = app.add_subcommand("bench", "synthetic benchmark table");
  std::string benchSuite = "table2", benchTitanium, benchOut;
  std::uint64_t benchSeed = 1;
  bench->add_option("--suite", benchSuite, "table2|synthetic")->default_val("table2");
  bench->add_option("--titanium", benchTitanium, "titanium heat CSV (enables f2 rows)");
  bench->add_option("--seed", benchSeed, "noise seed")->default_val(1);
  bench->add_option("--out", benchOut, "output CSV (default stdout)");

  auto* plot = app.add_subcommand("plot-data", "emit reconstruction series for plotting");
  std::string plotModel, plotIn, plotOut;
  double plotFs = 0.0;
  plot->add_option("--model", plotModel, "model JSON (from fit/compress)")->required();
  plot->add_option("--in", plotIn, "signal CSV")->required();
  plot->add_option("--fs", plotFs, "sampling rate for single-column CSV");
  plot->add_option("--out", plotOut, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
    if (*synth) return runSynth(synthFn, synthN, noiseLo, noiseHi, synthSeed, synthOut);
    if (*predict) return runPredict(predictFlags);
    if (*fit) return runFit(fitFlags);
    if (*compress) return runCompress(compressFlags, compressDir, emitRecon, !noTiming);
    if (*baseline) return runBaseline(baselineFlags, baselineMethod);
    if (*bench) return runBench(benchSuite, benchTitanium, benchSeed, benchOut);
    if (*plot) return runPlotData(plotModel, plotIn, plotFs, plotOut);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
}
