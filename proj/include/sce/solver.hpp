#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sce/generate.hpp"
#include "sce/models.hpp"
#include "sce/nn.hpp"
#include "sce/stats.hpp"
#include "sce/threads.hpp"

namespace sce {

// Seed-derivation salts. Every random stream in an experiment is reached by
// mixing the run seed with one of these, never by reusing a raw seed, so
// streams cannot collide.
inline constexpr std::uint64_t kSaltTestGen = 1;
inline constexpr std::uint64_t kSaltWeights = 2;
inline constexpr std::uint64_t kSaltPretrain = 3;
inline constexpr std::uint64_t kSaltRep = 4;

enum class ScoreMode { full, last_pair };

inline const char* to_string(ScoreMode m) { return m == ScoreMode::full ? "full" : "last-pair"; }

inline ScoreMode parse_score_mode(const std::string& s) {
  if (s == "full") return ScoreMode::full;
  if (s == "last-pair" || s == "last_pair") return ScoreMode::last_pair;
  fail(Errc::bad_argument, "unknown score mode '" + s + "'");
}

struct SolveConfig {
  Negatives negatives = Negatives::all;
  ScoreMode score = ScoreMode::full;
  // 1 in all paper-reproduction modes; exposed for exploration only.
  int steps_per_episode = 1;
};

struct EpisodeResult {
  int chosen_idx = 0;
  bool correct = false;
  std::array<double, 4> scores{};
  double loss_before = 0.0;
  double loss_after = 0.0;
  double seconds = 0.0;
};

namespace detail {

// Scores one choice as the variant's loss over [seq..., choice] (full mode) or
// as the final-transition error alone (last-pair mode).
template <typename T>
T score_choice(ModelRunner<T>& r, const EncodedSeq<T>& enc, typename Tape<T>::Id zc,
               const SolveConfig& cfg) {
  using Id = typename Tape<T>::Id;
  Tape<T>& t = r.tape();
  if (cfg.score == ScoreMode::last_pair) {
    const Id src = enc.src.back();
    if (r.bundle().cfg.loss == LossKind::relation) {
      const Id y = t.scalar_leaf(T(1));
      return t.scalar(t.square(t.sub(r.relation(enc.z.back(), zc), y)));
    }
    return t.scalar(prediction_error(t, r.predict(src), zc));
  }
  std::vector<Id> z6(enc.z.begin(), enc.z.end());
  z6.push_back(zc);
  const Id loss = sequence_loss_from_latents(r, std::span<const Id>(z6),
                                             std::span<const Id>(enc.src), cfg.negatives);
  return t.scalar(loss);
}

}  // namespace detail

// The naive protocol: loss on the K sequence images, one optimizer step, then
// each choice scored by the same loss with the choice as the sixth image.
// Ties go to the lowest index.
template <typename T>
EpisodeResult solve_test(ModelBundle<T>& bundle, const SCETest& test, const SolveConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  EpisodeResult out;
  if (bundle.cfg.chance_baseline) {
    out.chosen_idx = 0;
    out.correct = (test.correct_idx == 0);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
  }
  const std::span<const Image> seq(test.sequence_images);

  for (int step = 0; step < cfg.steps_per_episode; ++step) {
    Tape<T> tape;
    ModelRunner<T> runner(tape, bundle, true);
    const auto loss = sequence_loss(runner, seq, cfg.negatives);
    if (step == 0) out.loss_before = static_cast<double>(tape.scalar(loss));
    tape.backward(loss);
    runner.apply_step(bundle);
  }

  Tape<T> tape;
  ModelRunner<T> runner(tape, bundle, false);
  const EncodedSeq<T> enc = encode_sequence(runner, seq);
  out.loss_after = static_cast<double>(tape.scalar(sequence_loss_from_latents(
      runner, std::span<const typename Tape<T>::Id>(enc.z),
      std::span<const typename Tape<T>::Id>(enc.src), cfg.negatives)));

  std::array<T, 4> raw{};
  for (int c = 0; c < test.spec.n; ++c) {
    const auto zc = runner.encode_image(test.choice_images[static_cast<size_t>(c)]);
    raw[static_cast<size_t>(c)] = detail::score_choice(runner, enc, zc, cfg);
  }
  int best = 0;
  for (int c = 1; c < test.spec.n; ++c) {
    if (raw[static_cast<size_t>(c)] < raw[static_cast<size_t>(best)]) best = c;
  }
  for (int c = 0; c < test.spec.n; ++c) out.scores[static_cast<size_t>(c)] = static_cast<double>(raw[static_cast<size_t>(c)]);
  out.chosen_idx = best;
  out.correct = (best == test.correct_idx);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

struct AccuracyStats {
  std::string condition;
  TestSpec spec;
  int num_tests = 0;
  int num_correct = 0;
  double accuracy = 0.0;
  Interval ci{};
  double tests_per_sec = 0.0;  // wall-clock; excluded from deterministic output
  std::uint64_t seed = 0;      // run seed the per-test seeds were derived from
};

// Evaluates one grid condition. Per test i the seed chain is
//   base_i   = mix(global_seed, condition_id, i)
//   test gen = mix(base_i, kSaltTestGen)
//   weights  = mix(base_i, kSaltWeights)
// so tests are independent of execution order and thread count. When `base` is
// given (post-pretraining evaluation) the weight seed is unused and each test
// steps a fresh clone of *base instead. `pregen` generates all tests before
// the timed phase, so tests_per_sec measures solving only; every other output
// is unaffected (the seeds are the same either way).
template <typename T>
AccuracyStats run_condition(const TestSpec& spec, int num_tests, const VariantConfig& variant,
                            const SolveConfig& cfg, std::uint64_t global_seed, int threads = 1,
                            const ModelBundle<T>* base = nullptr, bool pregen = false) {
  if (num_tests <= 0) fail(Errc::bad_argument, "run_condition needs num_tests > 0");
  const std::uint64_t cid = condition_id(spec);
  const auto test_for = [&](size_t i) {
    TestSpec s = spec;
    s.seed = seed_mix({seed_mix({global_seed, cid, static_cast<std::uint64_t>(i)}), kSaltTestGen});
    return make_test(s);
  };
  std::vector<SCETest> tests;
  if (pregen) {
    tests.resize(static_cast<size_t>(num_tests));
    parallel_for(tests.size(), threads, [&](size_t i) { tests[i] = test_for(i); });
  }
  std::vector<std::uint8_t> correct(static_cast<size_t>(num_tests), 0);
  const auto t0 = std::chrono::steady_clock::now();
  parallel_for(static_cast<size_t>(num_tests), threads, [&](size_t i) {
    const std::uint64_t base_i = seed_mix({global_seed, cid, static_cast<std::uint64_t>(i)});
    const SCETest test = pregen ? std::move(tests[i]) : test_for(i);
    ModelBundle<T> bundle =
        base ? *base : ModelBundle<T>::init(variant, seed_mix({base_i, kSaltWeights}));
    const EpisodeResult r = solve_test(bundle, test, cfg);
    correct[i] = r.correct ? 1 : 0;
  });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  AccuracyStats st;
  st.condition = condition_string(spec);
  st.spec = spec;
  st.num_tests = num_tests;
  for (auto c : correct) st.num_correct += c;
  st.accuracy = static_cast<double>(st.num_correct) / num_tests;
  st.ci = wilson_ci(st.num_correct, num_tests);
  st.tests_per_sec = wall > 0.0 ? num_tests / wall : 0.0;
  st.seed = global_seed;
  return st;
}

// Self-supervised pretraining: one optimizer step per generated episode, on the
// episode's 5 sequence images only; optimizer state persists across episodes.
// Episode e draws its test from seed mix(seed, kSaltPretrain, e).
template <typename T>
void pretrain(ModelBundle<T>& bundle, const TestSpec& train_spec, int episodes,
              std::uint64_t seed, const SolveConfig& cfg) {
  if (episodes < 0) fail(Errc::bad_argument, "pretrain needs episodes >= 0");
  GenOptions opts;  // choices are never looked at, but generation keeps the full protocol
  for (int e = 0; e < episodes; ++e) {
    TestSpec s = train_spec;
    s.seed = seed_mix({seed, kSaltPretrain, static_cast<std::uint64_t>(e)});
    const SCETest test = make_test(s, opts);
    Tape<T> tape;
    ModelRunner<T> runner(tape, bundle, true);
    const auto loss = sequence_loss(runner, std::span<const Image>(test.sequence_images), cfg.negatives);
    tape.backward(loss);
    runner.apply_step(bundle);
  }
}

// The 8 transfer conditions: each predictive feature at difficulty 0 ("easy")
// and with all four non-predictive distractors active ("hard").
struct TransferCondition {
  Feature feature = Feature::number;
  bool hard = false;

  std::string name() const { return std::string(to_string(feature)) + (hard ? "-hard" : "-easy"); }

  TestSpec spec() const {
    TestSpec s = TestSpec::make(feature, {});
    if (hard) {
      for (int f = 0; f < kNumFeatures; ++f) {
        if (f != static_cast<int>(feature)) s.distractor[static_cast<size_t>(f)] = true;
      }
    }
    return s;
  }
};

inline std::vector<TransferCondition> transfer_conditions() {
  std::vector<TransferCondition> v;
  for (Feature f : {Feature::number, Feature::shade, Feature::shape, Feature::size}) {
    v.push_back({f, false});
    v.push_back({f, true});
  }
  return v;
}

inline TransferCondition parse_transfer_condition(const std::string& s) {
  for (const auto& c : transfer_conditions()) {
    if (s == c.name()) return c;
  }
  // Paper naming: the shade feature is called "color".
  if (s == "color-easy") return {Feature::shade, false};
  if (s == "color-hard") return {Feature::shade, true};
  fail(Errc::bad_argument, "unknown transfer condition '" + s + "'");
}

struct TransferCell {
  std::string train_cond;  // "naive" for the baseline row
  std::string test_cond;
  double mean_acc = 0.0;
  double sem = 0.0;
  std::vector<double> rep_acc;
};

struct TransferResult {
  std::vector<TransferCell> cells;  // rows: train conditions then naive; cols: test conditions
  int episodes = 0;
  int tests_per_cell = 0;
  int reps = 0;
  std::uint64_t seed = 0;
};

// Per repetition r and train condition ti:
//   rep_seed  = mix(global_seed, kSaltRep, r)
//   weights   = mix(rep_seed, kSaltWeights, ti)
//   pretrain  = episodes from mix(rep_seed, kSaltPretrain, ti)
//   evaluation runs run_condition with rep_seed, cloning the pretrained bundle
//   per test. The naive row evaluates with the same rep_seed and no base
//   bundle, so it reproduces plain run_condition results exactly.
template <typename T>
TransferResult transfer_matrix(const VariantConfig& variant, int episodes, int tests_per_cell,
                               int reps, std::uint64_t global_seed, const SolveConfig& cfg,
                               int threads = 1) {
  if (reps < 1) fail(Errc::bad_argument, "transfer_matrix needs reps >= 1");
  if (episodes < 0) fail(Errc::bad_argument, "transfer_matrix needs episodes >= 0");
  const auto conds = transfer_conditions();
  const size_t nc = conds.size();

  TransferResult out;
  out.episodes = episodes;
  out.tests_per_cell = tests_per_cell;
  out.reps = reps;
  out.seed = global_seed;
  out.cells.resize((nc + 1) * nc);
  auto& cells = out.cells;
  for (size_t ti = 0; ti <= nc; ++ti) {
    for (size_t si = 0; si < nc; ++si) {
      TransferCell& c = cells[ti * nc + si];
      c.train_cond = ti < nc ? conds[ti].name() : "naive";
      c.test_cond = conds[si].name();
      c.rep_acc.resize(static_cast<size_t>(reps), 0.0);
    }
  }

  for (int r = 0; r < reps; ++r) {
    const std::uint64_t rep_seed = seed_mix({global_seed, kSaltRep, static_cast<std::uint64_t>(r)});
    for (size_t ti = 0; ti < nc; ++ti) {
      ModelBundle<T> bundle = ModelBundle<T>::init(
          variant, seed_mix({rep_seed, kSaltWeights, static_cast<std::uint64_t>(ti)}));
      pretrain(bundle, conds[ti].spec(), episodes,
               seed_mix({rep_seed, kSaltPretrain, static_cast<std::uint64_t>(ti)}), cfg);
      for (size_t si = 0; si < nc; ++si) {
        const AccuracyStats st = run_condition<T>(conds[si].spec(), tests_per_cell, variant, cfg,
                                                  rep_seed, threads, &bundle);
        cells[ti * nc + si].rep_acc[static_cast<size_t>(r)] = st.accuracy;
      }
    }
    for (size_t si = 0; si < nc; ++si) {
      const AccuracyStats st =
          run_condition<T>(conds[si].spec(), tests_per_cell, variant, cfg, rep_seed, threads);
      cells[nc * nc + si].rep_acc[static_cast<size_t>(r)] = st.accuracy;
    }
  }

  for (auto& c : cells) {
    c.mean_acc = mean_of(c.rep_acc);
    c.sem = sem_of(c.rep_acc);
  }
  return out;
}

// Unweighted mean accuracy over a set of per-condition results.
inline double total_accuracy(std::span<const AccuracyStats> stats) {
  if (stats.empty()) fail(Errc::bad_argument, "total_accuracy of nothing");
  double s = 0.0;
  for (const auto& st : stats) s += st.accuracy;
  return s / static_cast<double>(stats.size());
}

}  // namespace sce
