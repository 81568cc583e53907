#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fks/metrics.hpp"
#include "fks/pipeline.hpp"

using namespace fks;

namespace {

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name, const std::string& content) {
    path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
  }
  ~TempFile() { std::error_code ec; std::filesystem::remove(path, ec); }
};

// Gaussian-bump train loosely shaped like heartbeats.
Signal ecgLike(std::size_t beats, std::size_t samplesPerBeat, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  std::size_t n = beats * samplesPerBeat;
  std::vector<double> xs(n), fs(n);
  std::vector<std::size_t> ann;
  for (std::size_t b = 0; b < beats; ++b) {
    double amp = 1.0 + jitter(rng);
    double width = 0.02 + 0.004 * jitter(rng);
    for (std::size_t i = 0; i < samplesPerBeat; ++i) {
      std::size_t k = b * samplesPerBeat + i;
      double u = static_cast<double>(i) / static_cast<double>(samplesPerBeat);
      xs[k] = static_cast<double>(k) / 360.0;
      double qrs = amp * std::exp(-(u - 0.3) * (u - 0.3) / width);
      double t = 0.25 * std::exp(-(u - 0.6) * (u - 0.6) / 0.01);
      double p = 0.12 * std::exp(-(u - 0.15) * (u - 0.15) / 0.004);
      fs[k] = qrs + t + p + 0.02 * jitter(rng);
    }
    ann.push_back(b * samplesPerBeat + samplesPerBeat * 3 / 10);
  }
  return Signal(std::move(xs), std::move(fs), std::move(ann));
}

}  // namespace

TEST_CASE("CSV ingestion handles both layouts and rejects bad input") {
  TempFile two("fks_two_col.csv", "0,1.5\n0.1,2.5\n0.2,3.5\n");
  Signal a = ingestCsv(two.path.string());
  REQUIRE(a.size() == 3);
  CHECK(a.x[1] == Catch::Approx(0.1));
  CHECK(a.f[2] == Catch::Approx(3.5));

  TempFile one("fks_one_col.csv", "1.5\n2.5\n3.5\n4.5\n");
  IngestOptions opts;
  opts.samplingRate = 10.0;
  Signal b = ingestCsv(one.path.string(), opts);
  REQUIRE(b.size() == 4);
  CHECK(b.x[3] == Catch::Approx(0.3));
  CHECK_THROWS(ingestCsv(one.path.string()));  // missing sampling rate

  TempFile bad("fks_bad.csv", "0,1\nxyz\n");
  CHECK_THROWS(ingestCsv(bad.path.string()));
  TempFile mixed("fks_mixed.csv", "0,1\n2\n");
  CHECK_THROWS(ingestCsv(mixed.path.string()));
  TempFile nonuni("fks_nonuni.csv", "0,1\n0.1,2\n0.35,3\n");
  CHECK_THROWS(ingestCsv(nonuni.path.string()));
  CHECK_THROWS(ingestCsv("/nonexistent/path.csv"));
}

TEST_CASE("comments and blank lines are skipped") {
  TempFile f("fks_comments.csv", "# header\n\n0,1\n0.5,2\n1,3\n");
  Signal s = ingestCsv(f.path.string());
  CHECK(s.size() == 3);
}

TEST_CASE("annotation ingestion validates ordering and range") {
  TempFile good("fks_ann_good.txt", "3\n10\n25\n");
  auto ann = ingestAnnotations(good.path.string(), 30);
  CHECK(ann == std::vector<std::size_t>{3, 10, 25});
  TempFile oor("fks_ann_oor.txt", "3\n40\n");
  CHECK_THROWS(ingestAnnotations(oor.path.string(), 30));
  TempFile desc("fks_ann_desc.txt", "10\n3\n");
  CHECK_THROWS(ingestAnnotations(desc.path.string(), 30));
}

TEST_CASE("beat segmentation uses midpoints with full coverage") {
  std::vector<double> xs(400), fs(400, 0.0);
  for (std::size_t i = 0; i < 400; ++i) xs[i] = static_cast<double>(i);
  Signal sig(xs, fs, {100, 300});
  auto segs = segmentBeats(sig);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].start == 0);
  CHECK(segs[0].end == 200);
  CHECK(segs[0].annotation == 100);
  CHECK(segs[1].start == 200);
  CHECK(segs[1].end == 400);
  Signal single(xs, fs, {100});
  CHECK_THROWS(segmentBeats(single));
}

TEST_CASE("amplitude normalization and exact model denormalization") {
  Signal sig = sampleUniform([](double x) { return 3.0 + 2.0 * std::sin(8.0 * x); },
                             0.0, 1.0, 120);
  Signal norm = sig;
  Normalization nrm = normalizeAmplitude(norm);
  double mean = 0.0, amax = 0.0;
  for (double v : norm.f) mean += v;
  mean /= 120.0;
  for (double v : norm.f) amax = std::max(amax, std::abs(v));
  CHECK_THAT(mean, Catch::Matchers::WithinAbs(0.0, 1e-12));
  CHECK_THAT(amax, Catch::Matchers::WithinAbs(1.0, 1e-12));

  KnotVector kv(3, 0.0, 1.0, {0.3, 0.6});
  std::vector<double> coeffs(static_cast<std::size_t>(kv.basisDim()));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (double& c : coeffs) c = unif(rng);
  SplineModel m(kv, coeffs);
  SplineModel raw = denormalizeModel(m, nrm);
  for (int i = 0; i <= 50; ++i) {
    double x = i / 50.0;
    CHECK_THAT(raw(x), Catch::Matchers::WithinAbs(nrm.scale * m(x) + nrm.offset, 1e-9));
  }
}

TEST_CASE("model JSON round-trips exactly") {
  KnotVector kv(3, 0.0, 2.0, {0.37, 1.114159});
  std::vector<double> coeffs{0.1, -2.25, 3.0 / 7.0, 1e-17, 42.0, -0.625};
  SplineModel m(kv, coeffs);
  json j = toJson(m);
  SplineModel back = modelFromJson(j);
  CHECK(back.knots == kv);
  CHECK(back.coeffs == coeffs);
}

TEST_CASE("segments shorter than 2(n+l) samples are skipped with a reason") {
  Signal sig = ecgLike(2, 360, 5);
  CompressionJob job;
  job.numKnots = 25;
  BeatSegment tiny{0, 30, 10};
  SegmentResult res = compressSegment(sig, tiny, 0, job);
  CHECK(res.skipped);
  CHECK_FALSE(res.skipReason.empty());
}

TEST_CASE("whole-signal compression produces a sane summary") {
  Signal sig = ecgLike(6, 360, 7);
  CompressionJob job;
  job.numKnots = 25;
  job.vpIters = 2;
  job.workers = 2;
  CompressionSummary sum = compressSignal(sig, job);
  REQUIRE(sum.segments.size() == 6);
  CHECK(sum.fittedBeats == 6);
  for (const auto& s : sum.segments) {
    REQUIRE_FALSE(s.skipped);
    CHECK(s.prdn >= 0.0);
    CHECK(s.prdn < 100.0);
    CHECK(s.cr == Catch::Approx(static_cast<double>(s.segment.end - s.segment.start) / 52.0));
    REQUIRE(s.model.has_value());
  }
  CHECK(sum.meanPrdn > 0.0);
  CHECK(sum.sampleWeightedPrdn > 0.0);
  CHECK(sum.totalCr == Catch::Approx(2160.0 / (6.0 * 52.0)));
}

TEST_CASE("VP refinement does not worsen the FOBA-initialized fit") {
  Signal sig = ecgLike(4, 360, 11);
  CompressionJob job;
  job.numKnots = 25;
  job.vpIters = 4;
  CompressionSummary sum = compressSignal(sig, job);
  std::size_t improvedOrEqual = 0;
  for (const auto& s : sum.segments)
    if (!s.skipped && s.prdn <= s.fobaPrdn + 1e-9) ++improvedOrEqual;
  CHECK(improvedOrEqual >= (sum.fittedBeats * 9) / 10);
}

TEST_CASE("summaries without timing are deterministic") {
  Signal sig = ecgLike(3, 360, 3);
  CompressionJob job;
  job.numKnots = 20;
  job.vpIters = 2;
  CompressionSummary a = compressSignal(sig, job);
  CompressionSummary b = compressSignal(sig, job);
  CHECK(summaryToJson(a, job, false).dump() == summaryToJson(b, job, false).dump());
}

TEST_CASE("auto-knots truncation keeps the highest-priority insertions") {
  Signal sig = ecgLike(1, 360, 9);
  CompressionJob full, autoJob;
  full.numKnots = autoJob.numKnots = 30;
  autoJob.autoKnots = true;
  autoJob.tau = 0.05;
  full.vpIters = autoJob.vpIters = 0;
  BeatSegment whole{0, sig.size(), 0};
  SegmentResult a = compressSegment(sig, whole, 0, full);
  SegmentResult b = compressSegment(sig, whole, 0, autoJob);
  REQUIRE_FALSE(a.skipped);
  REQUIRE_FALSE(b.skipped);
  CHECK(b.numKnots <= a.numKnots);
}

TEST_CASE("plot data echoes the samples and the knot markers") {
  Signal sig = sampleUniform([](double x) { return 1.0 + x; }, 0.0, 1.0, 10);
  KnotVector kv(0, 0.0, 1.0, {0.5});
  SplineModel m(kv, {2.0, 2.0});
  std::ostringstream ss;
  emitPlotData(m, sig, ss);
  std::string text = ss.str();
  CHECK(text.find("x,f,reconstruction") == 0);
  std::size_t markers = 0, pos = 0;
  while ((pos = text.find("knot,", pos)) != std::string::npos) { ++markers; pos += 5; }
  CHECK(markers == 3);  // n+1 knots for n=2 spans
}

TEST_CASE("error curve export is one row per knot count") {
  std::ostringstream ss;
  emitErrorCurve({12.5, 3.25, 1.0}, ss);
  std::string text = ss.str();
  CHECK(text.find("knots,eps") == 0);
  CHECK(text.find("3,12.5") != std::string::npos);
  CHECK(text.find("5,1") != std::string::npos);
}

TEST_CASE("benchmark table runs the synthetic rows") {
  auto rows = table2Rows();
  REQUIRE(rows.size() == 6);
  BenchResult res = runBenchRow(rows[1], 3, 1);  // f3 MSE row
  CHECK_FALSE(res.skipped);
  CHECK(res.value < 4e-4);
  BenchRow f2{"f2", "RSS", 49, 9, Norm::LInf, 20, 0, 0, 0.00209};
  BenchResult skipped = runBenchRow(f2, 3, 1);
  CHECK(skipped.skipped);
}
