#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fks/baselines.hpp"
#include "fks/bspline.hpp"
#include "fks/foba.hpp"
#include "fks/metrics.hpp"
#include "fks/signal.hpp"
#include "fks/varpro.hpp"

namespace fks {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// ingestion

struct IngestOptions {
  double samplingRate = 0.0;  // required for single-column CSV
};

// Reads a CSV signal: either "t,f" rows or a single "f" column combined
// with --fs.  Rejects non-uniform grids at a 1e-9 relative tolerance.
inline Signal ingestCsv(const std::string& path, IngestOptions opts = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ingest: cannot open " + path);
  std::vector<double> ts, fs;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b;
    if (ss >> a) {
      if (ss >> b) {
        ts.push_back(a);
        fs.push_back(b);
      } else {
        fs.push_back(a);
      }
    } else {
      throw std::runtime_error("ingest: malformed row " + std::to_string(lineNo) + " in " + path);
    }
  }
  if (!ts.empty() && ts.size() != fs.size())
    throw std::runtime_error("ingest: mixed one- and two-column rows in " + path);
  if (ts.empty()) {
    if (opts.samplingRate <= 0)
      throw std::runtime_error("ingest: single-column CSV needs a sampling rate");
    ts.resize(fs.size());
    for (std::size_t i = 0; i < fs.size(); ++i)
      ts[i] = static_cast<double>(i) / opts.samplingRate;
  }
  return Signal(std::move(ts), std::move(fs));
}

// One ascending integer sample index per line.
inline std::vector<std::size_t> ingestAnnotations(const std::string& path, std::size_t numSamples) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("annotations: cannot open " + path);
  std::vector<std::size_t> out;
  long long v;
  while (in >> v) {
    if (v < 0 || static_cast<std::size_t>(v) >= numSamples)
      throw std::runtime_error("annotations: index out of range in " + path);
    if (!out.empty() && static_cast<std::size_t>(v) <= out.back())
      throw std::runtime_error("annotations: indices must be strictly ascending in " + path);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// Amplitude normalization to zero mean and unit max-abs.  The transform
// is recorded so fitted models can be mapped back to raw units.
struct Normalization {
  double offset = 0.0;  // subtracted mean
  double scale = 1.0;   // max-abs after centering
};

inline Normalization normalizeAmplitude(Signal& sig) {
  Normalization nrm;
  double mean = 0.0;
  for (double v : sig.f) mean += v;
  mean /= static_cast<double>(sig.f.size());
  double amax = 0.0;
  for (double v : sig.f) amax = std::max(amax, std::abs(v - mean));
  nrm.offset = mean;
  nrm.scale = amax > 0 ? amax : 1.0;
  for (double& v : sig.f) v = (v - mean) / nrm.scale;
  return nrm;
}

// Maps a model fitted in normalized units back to raw units:
// scale * s(x) + offset, folding the constant in via partition of unity.
inline SplineModel denormalizeModel(const SplineModel& model, const Normalization& nrm) {
  std::vector<double> c = model.coeffs;
  const KnotVector& kv = model.knots;
  for (int k = kv.firstBasisIndex(); k <= kv.lastBasisIndex(); ++k) {
    double& ck = c[static_cast<std::size_t>(k + kv.degree())];
    ck = nrm.scale * ck + nrm.offset * kv.normalizationFactor(k);
  }
  return SplineModel(kv, std::move(c));
}

// ---------------------------------------------------------------------------
// beat segmentation

struct BeatSegment {
  std::size_t start = 0;       // inclusive sample index
  std::size_t end = 0;         // exclusive sample index
  std::size_t annotation = 0;  // the beat marker inside the segment
};

// Boundaries at midpoints between consecutive annotations; the first
// segment starts at sample 0 and the last ends at the final sample.
inline std::vector<BeatSegment> segmentBeats(const Signal& sig) {
  const auto& ann = sig.annotations;
  if (ann.size() < 2) throw std::invalid_argument("segmentBeats: need at least 2 annotations");
  std::vector<BeatSegment> segs;
  segs.reserve(ann.size());
  std::size_t start = 0;
  for (std::size_t i = 0; i < ann.size(); ++i) {
    std::size_t end = (i + 1 < ann.size()) ? (ann[i] + ann[i + 1]) / 2 : sig.size();
    segs.push_back({start, end, ann[i]});
    start = end;
  }
  return segs;
}

// ---------------------------------------------------------------------------
// compression pipeline

struct CompressionJob {
  std::string signalPath;
  std::string annotationsPath;  // optional
  Norm norm = Norm::L2;
  std::size_t numKnots = 25;  // n+1 including boundaries
  bool autoKnots = false;
  double tau = 0.01;
  int degree = 3;
  int vpIters = 4;
  JacobianMode jacobian = JacobianMode::Full;
  std::size_t delta = 1;
  double termTol = 0.1;
  double samplingRate = 0.0;
  bool normalize = true;
  std::uint64_t seed = 0;
  std::string outDir = ".";
  bool emitReconstruction = false;
  unsigned workers = 0;  // 0: hardware concurrency
};

struct SegmentResult {
  std::size_t index = 0;
  BeatSegment segment;
  bool skipped = false;
  std::string skipReason;
  std::size_t numKnots = 0;
  double fobaPrdn = 0.0;      // PRDN of the cubic fit on FOBA knots
  double prdn = 0.0;          // PRDN after VP refinement
  double eps1 = 0.0, epsInf = 0.0;
  double rss = 0.0;
  double cr = 0.0;
  int vpIterations = 0;
  std::optional<SplineModel> model;  // in raw signal units
};

struct CompressionSummary {
  std::vector<SegmentResult> segments;
  std::size_t fittedBeats = 0;
  double meanPrdn = 0.0;            // mean of per-beat PRDNs
  double sampleWeightedPrdn = 0.0;  // PRDN over the concatenated samples
  double meanFobaPrdn = 0.0;
  double totalCr = 0.0;             // N / (beats * (2n + l + 1))
  double predictSeconds = 0.0;
  double refineSeconds = 0.0;
};

namespace detail {

template <typename Fn>
inline void parallelFor(std::size_t count, unsigned workers, Fn&& fn) {
  unsigned hw = workers ? workers : std::max(1u, std::thread::hardware_concurrency());
  hw = std::min<unsigned>(hw, static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  if (hw <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(hw);
  for (unsigned t = 0; t < hw; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Fits one segment: FOBA knot prediction, cubic VP refinement, metrics.
inline SegmentResult compressSegment(const Signal& raw, const BeatSegment& seg,
                                     std::size_t index, const CompressionJob& job) {
  SegmentResult res;
  res.index = index;
  res.segment = seg;

  Signal local = raw.slice(seg.start, seg.end);
  std::size_t n = job.numKnots - 1;  // spans
  if (local.size() < 2 * (n + static_cast<std::size_t>(job.degree))) {
    res.skipped = true;
    res.skipReason = "segment shorter than 2(n+l) samples";
    return res;
  }

  Normalization nrm;
  if (job.normalize) nrm = normalizeAmplitude(local);

  std::size_t numKnots = job.numKnots;
  KnotPrediction pred = knotPred(local, numKnots, job.delta, job.norm);
  if (job.autoKnots) {
    std::size_t budget = estimateKnotBudget(pred.errorCurve, job.tau);
    if (budget < numKnots) {
      numKnots = std::max<std::size_t>(budget, 3);
      pred.interiorSamples.assign(pred.insertionOrder.begin(),
                                  pred.insertionOrder.begin() +
                                      static_cast<std::ptrdiff_t>(numKnots - 2));
      std::sort(pred.interiorSamples.begin(), pred.interiorSamples.end());
    }
  }

  KnotVector initKnots = pred.toKnotVector(local, job.degree);
  VpOptions opts;
  opts.maxIter = job.vpIters;
  opts.mode = job.jacobian;
  opts.termTol = job.termTol;

  // FOBA-initialized cubic fit for the refinement baseline
  Eigen::VectorXd fvec = Eigen::Map<const Eigen::VectorXd>(
      local.f.data(), static_cast<Eigen::Index>(local.f.size()));
  DesignMatrixBundle initBundle(initKnots, local);
  LinearFit initFit = linearSolve(initBundle, fvec);
  std::vector<double> initRec(local.size());
  Eigen::VectorXd initProj = fvec - initFit.residual;
  for (std::size_t i = 0; i < local.size(); ++i) initRec[i] = initProj(static_cast<Eigen::Index>(i));
  ErrorReport initRep = errorReport(local.f, initRec,
                                    static_cast<int>(numKnots - 1), job.degree);

  VpResult vp = vpOptimize(local, initKnots, opts);
  SplineModel fitted(vp.knots, std::vector<double>(vp.coeffs.data(),
                                                   vp.coeffs.data() + vp.coeffs.size()));
  std::vector<double> rec = evalModel(fitted, local.x);
  ErrorReport rep = errorReport(local.f, rec, static_cast<int>(numKnots - 1), job.degree);

  res.numKnots = numKnots;
  res.fobaPrdn = initRep.eps2;
  res.prdn = rep.eps2;
  res.eps1 = rep.eps1;
  res.epsInf = rep.epsInf;
  res.rss = rep.rss;
  res.vpIterations = vp.iterations;
  res.cr = compressionRatio(static_cast<double>(local.size()),
                            static_cast<int>(numKnots - 1), job.degree);
  res.model = job.normalize ? denormalizeModel(fitted, nrm) : fitted;
  return res;
}

inline CompressionSummary compressSignal(const Signal& sig, const CompressionJob& job) {
  std::vector<BeatSegment> segments;
  if (sig.annotations.size() >= 2) {
    segments = segmentBeats(sig);
  } else {
    segments.push_back({0, sig.size(), 0});
  }

  CompressionSummary sum;
  sum.segments.resize(segments.size());
  auto t0 = std::chrono::steady_clock::now();
  detail::parallelFor(segments.size(), job.workers, [&](std::size_t i) {
    try {
      sum.segments[i] = compressSegment(sig, segments[i], i, job);
    } catch (const std::exception& e) {
      sum.segments[i].index = i;
      sum.segments[i].segment = segments[i];
      sum.segments[i].skipped = true;
      sum.segments[i].skipReason = e.what();
    }
  });
  auto t1 = std::chrono::steady_clock::now();
  sum.refineSeconds = std::chrono::duration<double>(t1 - t0).count();

  double rssTotal = 0.0, denomTotal = 0.0;
  double prdnSum = 0.0, fobaSum = 0.0;
  std::size_t fitted = 0;
  for (const auto& s : sum.segments) {
    if (s.skipped) continue;
    ++fitted;
    prdnSum += s.prdn;
    fobaSum += s.fobaPrdn;
    Signal local = sig.slice(s.segment.start, s.segment.end);
    double mean = 0.0;
    for (double v : local.f) mean += v;
    mean /= static_cast<double>(local.f.size());
    for (double v : local.f) denomTotal += (v - mean) * (v - mean);
    std::vector<double> rec = evalModel(*s.model, local.x);
    for (std::size_t i = 0; i < local.f.size(); ++i) {
      double d = local.f[i] - rec[i];
      rssTotal += d * d;
    }
  }
  sum.fittedBeats = fitted;
  if (fitted > 0) {
    sum.meanPrdn = prdnSum / static_cast<double>(fitted);
    sum.meanFobaPrdn = fobaSum / static_cast<double>(fitted);
    sum.totalCr = static_cast<double>(sig.size()) /
                  (static_cast<double>(fitted) * (2.0 * (static_cast<double>(job.numKnots) - 1.0) +
                                                  job.degree + 1.0));
  }
  if (denomTotal > 0) sum.sampleWeightedPrdn = 100.0 * std::sqrt(rssTotal / denomTotal);
  return sum;
}

// ---------------------------------------------------------------------------
// serialization

inline json toJson(const KnotVector& kv) {
  return json{{"degree", kv.degree()}, {"a", kv.a()}, {"b", kv.b()}, {"interior", kv.interior()}};
}

inline json toJson(const SplineModel& m) {
  return json{{"knots", toJson(m.knots)}, {"coeffs", m.coeffs}};
}

inline SplineModel modelFromJson(const json& j) {
  const auto& k = j.at("knots");
  KnotVector kv(k.at("degree").get<int>(), k.at("a").get<double>(), k.at("b").get<double>(),
                k.at("interior").get<std::vector<double>>());
  return SplineModel(std::move(kv), j.at("coeffs").get<std::vector<double>>());
}

inline json jobToJson(const CompressionJob& job) {
  return json{{"signal", job.signalPath},
              {"annotations", job.annotationsPath},
              {"norm", normName(job.norm)},
              {"knots", job.numKnots},
              {"auto_knots", job.autoKnots},
              {"tau", job.tau},
              {"degree", job.degree},
              {"max_iter", job.vpIters},
              {"jacobian", job.jacobian == JacobianMode::Full ? "full" : "kaufman"},
              {"delta", job.delta},
              {"term_tol", job.termTol},
              {"fs", job.samplingRate},
              {"normalize", job.normalize},
              {"seed", job.seed}};
}

inline json summaryToJson(const CompressionSummary& sum, const CompressionJob& job,
                          bool includeTiming = true) {
  json segs = json::array();
  for (const auto& s : sum.segments) {
    json e{{"index", s.index},
           {"start", s.segment.start},
           {"end", s.segment.end},
           {"skipped", s.skipped}};
    if (s.skipped) {
      e["reason"] = s.skipReason;
    } else {
      e["knots"] = s.numKnots;
      e["foba_prdn"] = s.fobaPrdn;
      e["prdn"] = s.prdn;
      e["eps1"] = s.eps1;
      e["eps_inf"] = s.epsInf;
      e["rss"] = s.rss;
      e["cr"] = s.cr;
      e["vp_iterations"] = s.vpIterations;
    }
    segs.push_back(std::move(e));
  }
  json out{{"job", jobToJson(job)},
           {"segments", std::move(segs)},
           {"aggregate",
            json{{"beats", sum.fittedBeats},
                 {"mean_prdn", sum.meanPrdn},
                 {"sample_weighted_prdn", sum.sampleWeightedPrdn},
                 {"mean_foba_prdn", sum.meanFobaPrdn},
                 {"cr", sum.totalCr}}}};
  if (includeTiming)
    out["timing"] = json{{"refine_seconds", sum.refineSeconds}};
  return out;
}

// Dense reconstruction CSV: x, f, reconstruction, plus knot marker rows.
inline void emitPlotData(const SplineModel& model, const Signal& sig, std::ostream& os) {
  std::vector<double> rec = evalModel(model, sig.x);
  os.precision(17);
  os << "x,f,reconstruction\n";
  for (std::size_t i = 0; i < sig.size(); ++i)
    os << sig.x[i] << "," << sig.f[i] << "," << rec[i] << "\n";
  os << "# knots\n";
  os << "knot," << model.knots.a() << ",\n";
  for (double t : model.knots.interior()) os << "knot," << t << ",\n";
  os << "knot," << model.knots.b() << ",\n";
}

inline void emitErrorCurve(const std::vector<double>& curve, std::ostream& os) {
  os.precision(17);
  os << "knots,eps\n";
  for (std::size_t k = 0; k < curve.size(); ++k) os << (k + 3) << "," << curve[k] << "\n";
}

// ---------------------------------------------------------------------------
// synthetic benchmark (Table-2-style configurations)

struct BenchRow {
  std::string signal;
  std::string measure;  // RSS | MSE | BRE | BIC
  std::size_t numSamples;
  std::size_t numKnots;  // n+1
  Norm norm;
  int maxIter;
  double noiseLo = 0.0, noiseHi = 0.0;
  double target;  // published reference value
};

inline std::vector<BenchRow> table2Rows() {
  return {
      {"f1", "RSS", 256, 8, Norm::LInf, 4, -0.3, 0.3, 7.9950},
      {"f3", "MSE", 101, 15, Norm::L2, 4, 0, 0, 0.00019},
      {"f4", "MSE", 200, 15, Norm::L1, 4, -0.05, 0.05, 0.00082},
      {"f3", "BIC", 201, 6, Norm::L1, 7, 0, 0, 332.0},
      {"f5", "BIC", 201, 7, Norm::LInf, 14, 0, 0, 471.0},
      {"f6", "BIC", 201, 10, Norm::L2, 19, 0, 0, 1491.0},
  };
}

struct BenchResult {
  BenchRow row;
  double value = 0.0;
  int iterations = 0;
  bool skipped = false;
  std::string reason;
};

inline BenchResult runBenchRow(const BenchRow& row, int degree = 3,
                               std::uint64_t seed = 1,
                               const std::optional<Signal>& titanium = std::nullopt) {
  BenchResult res{row, 0.0, 0, false, ""};
  Signal sig;
  if (row.signal == "f2") {
    if (!titanium) {
      res.skipped = true;
      res.reason = "titanium dataset not supplied";
      return res;
    }
    sig = *titanium;
  } else {
    int id = row.signal[1] - '0';
    auto [a, b] = testFunctionDomain(id);
    sig = sampleUniform([&](double x) { return testFunction(id, x); }, a, b, row.numSamples);
    if (row.noiseLo != 0.0 || row.noiseHi != 0.0)
      sig = addNoise(sig, row.noiseLo, row.noiseHi, seed);
  }

  // Try all three l_p knot predictions and keep the one whose refined fit
  // achieves the smallest residual; row.norm records the published winner.
  std::optional<VpResult> best;
  int bestIters = 0;
  for (Norm p : {Norm::L1, Norm::L2, Norm::LInf}) {
    KnotPrediction pred = knotPred(sig, row.numKnots, 1, p);
    KnotVector init = pred.toKnotVector(sig, degree);
    VpOptions opts;
    opts.maxIter = row.maxIter;
    opts.termTol = 0.0;  // run the published iteration budget
    try {
      VpResult vp = vpOptimize(sig, init, opts);
      if (!best || vp.objective < best->objective) {
        bestIters = vp.iterations;
        best = std::move(vp);
      }
    } catch (const std::invalid_argument&) {
      // initialization violates Schoenberg-Whitney; skip this norm
    }
  }
  if (!best) {
    res.skipped = true;
    res.reason = "no admissible knot initialization";
    return res;
  }
  const VpResult& vp = *best;
  SplineModel model(vp.knots,
                    std::vector<double>(vp.coeffs.data(), vp.coeffs.data() + vp.coeffs.size()));
  std::vector<double> rec = evalModel(model, sig.x);
  ErrorReport rep = errorReport(sig.f, rec, static_cast<int>(row.numKnots) - 1, degree);
  res.iterations = bestIters;
  if (row.measure == "RSS") res.value = rep.rss;
  else if (row.measure == "MSE") res.value = rep.mse;
  else if (row.measure == "BRE") res.value = rep.bre;
  else res.value = rep.bic;
  return res;
}

inline void emitBenchCsv(const std::vector<BenchResult>& results, std::ostream& os) {
  os.precision(17);
  os << "signal,measure,N,knots,norm,iterations,value,target,status\n";
  for (const auto& r : results) {
    os << r.row.signal << "," << r.row.measure << "," << r.row.numSamples << ","
       << r.row.numKnots << "," << normName(r.row.norm) << "," << r.iterations << ",";
    if (r.skipped)
      os << ",," << "skipped:" << r.reason << "\n";
    else
      os << r.value << "," << r.row.target << ",ok\n";
  }
}

}  // namespace fks
