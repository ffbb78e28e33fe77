#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vecmotif/motif.hpp"

namespace vm = vecmotif;

namespace {

vm::Vocabulary vocab_of(const std::vector<std::vector<double>>& vecs) {
  vm::Vocabulary v;
  v.dim = vecs.front().size();
  for (std::size_t i = 0; i < vecs.size(); ++i) v.classes.push_back({static_cast<vm::ClassId>(i), -1, vecs[i], 1, {}});
  return v;
}

std::vector<double> at_angle(double radians) { return {std::cos(radians), std::sin(radians)}; }

// Orthonormal basis vectors: every pair has cosine 0.
vm::Vocabulary orthogonal_vocab(std::size_t n) {
  std::vector<std::vector<double>> vecs(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) vecs[i][i] = 1.0;
  return vocab_of(vecs);
}

vm::ClassSequence seq(const std::string& id, std::vector<vm::ClassId> classes) {
  vm::ClassSequence s{id, std::move(classes), {}};
  s.origin.assign(s.classes.size(), -1);
  return s;
}

}  // namespace

TEST(SimilarityDictionary, DuplicateVectorsShareFullWeight) {
  auto v = vocab_of({{1, 2}, {1, 2}, {-2, 1}});
  auto d = vm::build_similarity_dictionary(v, 0.995);
  ASSERT_EQ(d.neighbors[0].size(), 2u);
  EXPECT_EQ(d.neighbors[0][0], (vm::WeightedClass{0, 1.0}));
  EXPECT_EQ(d.neighbors[0][1].first, 1);
  EXPECT_NEAR(d.neighbors[0][1].second, 1.0, 1e-12);
  EXPECT_EQ(d.neighbors[2].size(), 1u);
}

TEST(SimilarityDictionary, LinearMapAndCutoff) {
  const double tau = 0.995;
  double mid = std::acos((1.0 + tau) / 2.0);
  double below = std::acos(tau - 0.001);
  auto v = vocab_of({at_angle(0.0), at_angle(mid), at_angle(-below)});
  auto d = vm::build_similarity_dictionary(v, tau);
  ASSERT_EQ(d.neighbors[0].size(), 2u);
  EXPECT_EQ(d.neighbors[0][1].first, 1);
  EXPECT_NEAR(d.neighbors[0][1].second, 0.5, 1e-9);
  EXPECT_NEAR(d.neighbors[1][0].second, 0.5, 1e-9);  // symmetric
  // class 2 is below the cut-off against 0 and further still from 1
  EXPECT_EQ(d.neighbors[2].size(), 1u);
  // unit-mass version
  EXPECT_NEAR(d.mass[0][0].second, 1.0 / 1.5, 1e-9);
  EXPECT_NEAR(d.mass[0][1].second, 0.5 / 1.5, 1e-9);
}

TEST(SimilarityDictionary, TauMustBeOpenUnitInterval) {
  auto v = orthogonal_vocab(2);
  EXPECT_THROW(vm::build_similarity_dictionary(v, 0.0), vm::ArgumentError);
  EXPECT_THROW(vm::build_similarity_dictionary(v, 1.0), vm::ArgumentError);
}

TEST(SimilarityDictionary, SymmetryProperty) {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> ang(0.0, 0.3);
  std::vector<std::vector<double>> vecs;
  for (int i = 0; i < 40; ++i) vecs.push_back(at_angle(ang(rng)));
  auto d = vm::build_similarity_dictionary(vocab_of(vecs), 0.999);
  for (std::size_t a = 0; a < d.size(); ++a) {
    EXPECT_EQ(d.neighbors[a].front().first <= static_cast<vm::ClassId>(a), true);
    for (auto [b, w] : d.neighbors[a]) {
      EXPECT_GT(w, 0.0);
      EXPECT_LE(w, 1.0);
      const auto& back = d.neighbors[static_cast<std::size_t>(b)];
      auto it = std::find_if(back.begin(), back.end(), [&](auto& e) { return e.first == static_cast<vm::ClassId>(a); });
      ASSERT_NE(it, back.end());
      EXPECT_EQ(it->second, w);
    }
  }
}

TEST(Background, PlainFrequencies) {
  auto v = orthogonal_vocab(2);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 0, 1}), seq("b", {0})};
  auto bg = vm::background(seqs, d, 2.0);
  EXPECT_NEAR(bg.p[0], 0.75, 1e-15);
  EXPECT_NEAR(bg.p[1], 0.25, 1e-15);
  EXPECT_NEAR(bg.b[0], 1.5, 1e-15);
  EXPECT_EQ(bg.B, 2.0);
}

TEST(Background, SingleClassCorpus) {
  auto v = orthogonal_vocab(1);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 0})};
  EXPECT_EQ(vm::background(seqs, d, 1.0).p, (std::vector<double>{1.0}));
}

// A observed once, C never observed but similar with weight 0.5:
// spread counts (A: 1/1.5, C: 0.5/1.5) -> p = (2/3, 1/3).
TEST(Background, SimilaritySpreadsCounts) {
  const double tau = 0.995;
  auto v = vocab_of({at_angle(0.0), at_angle(std::acos((1.0 + tau) / 2.0))});
  auto d = vm::build_similarity_dictionary(v, tau);
  std::vector<vm::ClassSequence> seqs{seq("a", {0})};
  auto bg = vm::background(seqs, d, 1.0);
  EXPECT_NEAR(bg.p[0], 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(bg.p[1], 1.0 / 3.0, 1e-9);
}

TEST(Background, FloorsUnseenClasses) {
  auto v = orthogonal_vocab(4);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 1, 1})};
  auto bg = vm::background(seqs, d, 1.0);
  double total = 0.0;
  for (double p : bg.p) {
    EXPECT_GE(p, vm::Background::kFloor);
    total += p;
  }
  EXPECT_NEAR(total, 1.0, 1e-15);
}

TEST(Profile, DirectSubstitution) {
  auto v = orthogonal_vocab(2);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("h", {1, 0}), seq("a", {0, 1}), seq("b", {0, 0})};
  vm::MotifState st{1, {0, 0, 0}};
  vm::Background bg{{0.5, 0.5}, {0.5, 0.5}, 1.0};
  auto q = vm::profile(seqs, st, 0, d, bg);
  EXPECT_NEAR(q(0, 0), 2.5 / 3.0, 1e-15);
  EXPECT_NEAR(q(0, 1), 0.5 / 3.0, 1e-15);
}

TEST(Profile, UnseenDissimilarClassGetsPseudocountOnly) {
  auto v = orthogonal_vocab(3);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 1}), seq("b", {1, 0}), seq("c", {0, 0})};
  vm::MotifState st{2, {0, 0, 0}};
  vm::Background bg{{0.4, 0.4, 0.2}, {0.8, 0.8, 0.4}, 2.0};
  auto q = vm::profile(seqs, st, 2, d, bg);
  EXPECT_NEAR(q(0, 2), 0.4 / 4.0, 1e-15);
  EXPECT_NEAR(q(1, 2), 0.4 / 4.0, 1e-15);
}

TEST(Profile, NeedsTwoSequences) {
  auto v = orthogonal_vocab(2);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 1})};
  vm::MotifState st{1, {0}};
  vm::Background bg{{0.5, 0.5}, {0.5, 0.5}, 1.0};
  EXPECT_THROW(vm::profile(seqs, st, 0, d, bg), vm::DomainError);
}

// Holdout independence: changing the holdout's window leaves q untouched.
TEST(Profile, NeverReadsHoldoutWindow) {
  auto v = orthogonal_vocab(4);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 1, 2, 3}), seq("b", {3, 2, 1, 0}), seq("c", {1, 1, 2, 2})};
  auto bg = vm::background(seqs, d, 1.5);
  vm::MotifState s1{2, {0, 1, 2}}, s2{2, {2, 1, 2}};
  EXPECT_EQ(vm::profile(seqs, s1, 0, d, bg).q, vm::profile(seqs, s2, 0, d, bg).q);
}

TEST(ScorePositions, BackgroundProfileGivesOne) {
  vm::Profile prof{2, 3, {0.2, 0.3, 0.5, 0.2, 0.3, 0.5}};
  std::vector<double> p{0.2, 0.3, 0.5};
  auto a = vm::score_positions(seq("s", {0, 1, 2, 2, 1}), prof, p);
  ASSERT_EQ(a.size(), 4u);
  for (double x : a) EXPECT_NEAR(x, 1.0, 1e-15);
}

TEST(ScorePositions, ConcentratedProfileGivesConstantRatio) {
  // window elements 1, 2 carry m * p of the mass at their positions
  const double m = 3.0;
  std::vector<double> p{0.5, 0.2, 0.3};
  vm::Profile prof{2, 3, {0.1 / 2, m * 0.2, 1 - m * 0.2 - 0.05, 0.05, 0.05, m * 0.3}};
  auto a = vm::score_positions(seq("s", {1, 2}), prof, p);
  EXPECT_NEAR(a[0], m, 1e-12);
}

TEST(ScorePositions, MatchesDirectEvaluation) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (int t = 0; t < 100; ++t) {
    const std::size_t w = 1 + rng() % 3;
    vm::Profile prof{w, 2, {}};
    for (std::size_t k = 0; k < 2 * w; ++k) prof.q.push_back(u(rng));
    std::vector<double> p{u(rng), u(rng)};
    std::vector<vm::ClassId> classes(w + rng() % 6);
    for (auto& c : classes) c = static_cast<vm::ClassId>(rng() % 2);
    auto a = vm::score_positions(seq("s", classes), prof, p);
    for (std::size_t x = 0; x + w <= classes.size(); ++x) {
      double direct = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        auto c = static_cast<std::size_t>(classes[x + i]);
        direct += prof.q[i * 2 + c] / p[c];
      }
      EXPECT_NEAR(a[x], direct / static_cast<double>(w), 1e-12);
      EXPECT_GT(a[x], 0.0);
    }
  }
}

TEST(ScorePositions, ShortSequenceIsRejected) {
  vm::Profile prof{3, 1, {1, 1, 1}};
  std::vector<double> p{1.0};
  EXPECT_THROW(vm::score_positions(seq("s", {0, 0}), prof, p), vm::ArgumentError);
}

TEST(SampleWindow, SingleCandidate) {
  std::mt19937_64 rng(1);
  std::vector<double> a{0.7};
  for (int i = 0; i < 100; ++i) EXPECT_EQ(vm::sample_window(std::span<const double>(a), rng), 0u);
}

TEST(SampleWindow, EmpiricalFrequencyMatchesWeights) {
  std::mt19937_64 rng(2);
  std::vector<double> a{1.0, 3.0};
  const int draws = 100000;
  int second = 0;
  for (int i = 0; i < draws; ++i) second += vm::sample_window(std::span<const double>(a), rng) == 1;
  EXPECT_NEAR(static_cast<double>(second) / draws, 0.75, 0.02);
}

TEST(SampleWindow, EqualWeightsAreUniform) {
  std::mt19937_64 rng(3);
  std::vector<double> a{2.0, 2.0, 2.0};
  const int draws = 100000;
  std::array<int, 3> counts{};
  for (int i = 0; i < draws; ++i) ++counts[vm::sample_window(std::span<const double>(a), rng)];
  const double expect = draws / 3.0, sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  for (int c : counts) EXPECT_LT(std::abs(c - expect), 3 * sigma);
}

TEST(SampleWindow, AllZeroFallsBackToUniform) {
  std::mt19937_64 rng(4);
  std::vector<double> a{0.0, 0.0, 0.0, 0.0};
  std::array<int, 4> counts{};
  for (int i = 0; i < 40000; ++i) ++counts[vm::sample_window(std::span<const double>(a), rng)];
  for (int c : counts) EXPECT_GT(c, 9000);
  std::vector<double> none;
  EXPECT_THROW(vm::sample_window(std::span<const double>(none), rng), vm::ArgumentError);
}

TEST(GlobalPattern, IdenticalMotifsScoreOne) {
  auto v = orthogonal_vocab(4);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {3, 1, 2, 0}), seq("b", {1, 2, 0, 0}), seq("c", {0, 0, 1, 2})};
  vm::MotifState st{2, {1, 0, 2}};
  auto gp = vm::global_pattern(seqs, st, d, v);
  EXPECT_EQ(gp.pattern, (std::vector<vm::ClassId>{1, 2}));
  EXPECT_NEAR(gp.global_score, 1.0, 1e-15);
}

TEST(GlobalPattern, OrthogonalElementsScoreHalf) {
  // pattern comes from the plurality; the others are orthogonal to it
  auto v = orthogonal_vocab(6);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 1}), seq("b", {2, 3}), seq("c", {4, 5})};
  vm::MotifState st{2, {0, 0, 0}};
  auto gp = vm::global_pattern(seqs, st, d, v);
  // ties go to the smallest class id
  EXPECT_EQ(gp.pattern, (std::vector<vm::ClassId>{0, 1}));
  EXPECT_NEAR(gp.score_vector[0], (1.0 + 0.5 + 0.5) / 3.0, 1e-15);

  // all elements orthogonal to a pattern formed elsewhere
  std::vector<vm::ClassSequence> seqs2{seq("a", {0, 1}), seq("b", {0, 1}), seq("c", {2, 3}), seq("d", {4, 5})};
  auto gp2 = vm::global_pattern(seqs2, vm::MotifState{2, {0, 0, 0, 0}}, d, v);
  EXPECT_NEAR(gp2.score_vector[0], (1.0 + 1.0 + 0.5 + 0.5) / 4.0, 1e-15);
  EXPECT_NEAR(vm::local_alignment(std::vector<vm::ClassId>{2, 3}, gp2.pattern, v), 0.5, 1e-15);
}

TEST(GlobalPattern, ScoreIsMeanOfScoreVector) {
  std::mt19937 rng(6);
  std::normal_distribution<double> g;
  std::vector<std::vector<double>> vecs(8, std::vector<double>(3));
  for (auto& x : vecs)
    for (auto& c : x) c = g(rng);
  auto v = vocab_of(vecs);
  auto d = vm::build_similarity_dictionary(v, 0.9);
  for (int t = 0; t < 50; ++t) {
    std::vector<vm::ClassSequence> seqs;
    vm::MotifState st{3, {}};
    for (int s = 0; s < 5; ++s) {
      std::vector<vm::ClassId> cls(3 + rng() % 5);
      for (auto& c : cls) c = static_cast<vm::ClassId>(rng() % 8);
      st.starts.push_back(rng() % (cls.size() - 2));
      seqs.push_back(seq("s" + std::to_string(s), cls));
    }
    auto gp = vm::global_pattern(seqs, st, d, v);
    double sum = 0;
    for (double x : gp.score_vector) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
      sum += x;
    }
    EXPECT_NEAR(gp.global_score, sum / 3.0, 1e-15);
    // local scores average back to the global score
    double local = 0;
    for (std::size_t m = 0; m < seqs.size(); ++m)
      local += vm::local_alignment(std::span(seqs[m].classes).subspan(st.starts[m], 3), gp.pattern, v);
    EXPECT_NEAR(local / 5.0, gp.global_score, 1e-12);
  }
}

TEST(LocalAlignment, SelfOrthogonalAntipodal) {
  auto v = vocab_of({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
  std::vector<vm::ClassId> a{0, 1}, orth{1, 0}, anti{2, 3}, wrong{0};
  EXPECT_NEAR(vm::local_alignment(a, a, v), 1.0, 1e-15);
  EXPECT_NEAR(vm::local_alignment(orth, a, v), 0.5, 1e-15);
  EXPECT_NEAR(vm::local_alignment(anti, a, v), 0.0, 1e-15);
  EXPECT_THROW(vm::local_alignment(wrong, a, v), vm::ArgumentError);
}

TEST(ZScore, Substitutions) {
  EXPECT_EQ(vm::z_score(10, 100, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(vm::z_score(19, 100, 0.1), 3.0);
  EXPECT_DOUBLE_EQ(vm::z_score(21, 22, 0.5), 10.0 / std::sqrt(5.5));
  EXPECT_THROW(vm::z_score(1, 10, 0.0), vm::DomainError);
  EXPECT_THROW(vm::z_score(1, 10, 1.0), vm::DomainError);
  EXPECT_THROW(vm::z_score(11, 10, 0.5), vm::DomainError);
}

TEST(RunGibbs, IdenticalWidthLengthSequencesScoreOne) {
  auto v = orthogonal_vocab(5);
  std::vector<vm::ClassSequence> seqs;
  for (int s = 0; s < 6; ++s) seqs.push_back(seq("s" + std::to_string(s), {4, 2, 0}));
  vm::GibbsConfig cfg;
  cfg.seed = 3;
  auto r = vm::run_gibbs(seqs, v, 3, cfg);
  EXPECT_NEAR(r.global_score, 1.0, 1e-15);
  EXPECT_LE(r.accepted, seqs.size());
  EXPECT_EQ(r.global_pattern, (std::vector<vm::ClassId>{4, 2, 0}));
}

TEST(RunGibbs, ExcludesShortSequencesAndNeedsTwo) {
  auto v = orthogonal_vocab(3);
  std::vector<vm::ClassSequence> seqs{seq("long1", {0, 1, 2, 0}), seq("short", {0}), seq("long2", {2, 0, 1, 2})};
  vm::GibbsConfig cfg;
  auto r = vm::run_gibbs(seqs, v, 3, cfg);
  EXPECT_EQ(r.excluded, (std::vector<std::string>{"short"}));
  EXPECT_EQ(r.sequences.size(), 2u);
  std::vector<vm::ClassSequence> one{seq("a", {0, 1, 2})};
  EXPECT_THROW(vm::run_gibbs(one, v, 3, cfg), vm::DomainError);
  std::vector<vm::ClassSequence> bad{seq("a", {0, 1, 7}), seq("b", {0, 1, 2})};
  EXPECT_THROW(vm::run_gibbs(bad, v, 3, cfg), vm::ArgumentError);
}

TEST(RunGibbs, DeterministicAndMonotone) {
  std::mt19937 rng(12);
  auto v = orthogonal_vocab(12);
  std::vector<vm::ClassSequence> seqs;
  for (int s = 0; s < 8; ++s) {
    std::vector<vm::ClassId> cls(10 + rng() % 6);
    for (auto& c : cls) c = static_cast<vm::ClassId>(rng() % 12);
    seqs.push_back(seq("s" + std::to_string(s), cls));
  }
  vm::GibbsConfig cfg;
  cfg.seed = 77;
  cfg.restarts = 3;
  auto a = vm::run_gibbs(seqs, v, 4, cfg);
  auto b = vm::run_gibbs(seqs, v, 4, cfg);
  EXPECT_EQ(vm::motif_result_to_json(a).dump(), vm::motif_result_to_json(b).dump());
  ASSERT_FALSE(a.score_trace.empty());
  for (std::size_t i = 1; i < a.score_trace.size(); ++i) EXPECT_GE(a.score_trace[i], a.score_trace[i - 1]);
  EXPECT_EQ(a.score_trace.back(), a.global_score);
  for (std::size_t m = 0; m < a.sequences.size(); ++m) {
    EXPECT_LE(a.state.starts[m] + 4, a.sequences[m].classes.size());
    EXPECT_GE(a.local_scores[m], 0.0);
    EXPECT_LE(a.local_scores[m], 1.0);
  }
}

TEST(Significance, CountsAlignedSequencesAndSmoothsRate) {
  auto v = orthogonal_vocab(4);
  auto d = vm::build_similarity_dictionary(v, 0.995);
  std::vector<vm::ClassSequence> seqs{seq("a", {0, 1, 2, 3}), seq("b", {3, 3, 0, 1}), seq("c", {2, 2, 2, 2})};
  auto bg = vm::background(seqs, d, 1.0);
  std::vector<vm::ClassId> pattern{0, 1};
  vm::SignificanceConfig cfg{2000, 0.99};
  auto sig = vm::significance(seqs, pattern, v, bg, cfg, 5);
  EXPECT_EQ(sig.n_s, 2u);
  EXPECT_EQ(sig.n, 3u);
  EXPECT_EQ(sig.background_length, 4u);
  // i.i.d. length-4 draws hit "0 1" somewhere with probability
  // 1 - P(no "01" in 4 draws); p0 = 3/16, p1 = 2/16 here.
  EXPECT_GT(sig.p_s, 0.0);
  EXPECT_LT(sig.p_s, 1.0);
  EXPECT_DOUBLE_EQ(sig.z, vm::z_score(sig.n_s, sig.n, sig.p_s));
}
