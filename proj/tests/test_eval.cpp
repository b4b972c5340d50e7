#include <cmath>

#include "cduap/errors.hpp"
#include "cduap/eval.hpp"
#include "cduap/training.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cduap;

namespace {

struct Victim {
  LabeledDataset train, test;
  MlpClassifier model;
  explicit Victim(std::uint64_t seed) {
    auto [tr, te] = split_train_test(gen_blobs(4, 60, 6, 0.05, 1), 0.25, 1);
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.adam.learning_rate = 1e-2;
    cfg.seed = seed;
    model = train_classifier(MlpClassifier::init({6, 16, 4}, seed), tr, &te, cfg).model;
    train = filter_correct(model, tr);
    test = te;
  }
};

const Victim& victim(std::uint64_t seed = 1) {
  static const Victim a(1), b(2);
  return seed == 1 ? a : b;
}

AttackConfig quick() {
  AttackConfig c;
  c.class_spec = "0:1";
  c.batch_size = 16;
  c.iterations = 30;
  return c;
}

// Per-sample recount of every report field.
void check_against_counts(const MlpClassifier& m, const LabeledDataset& test, const ClassPartition& p,
                          const Tensor& delta, const EvalReport& r) {
  const auto clean = predict(m, test.features);
  const auto adv = predict(m, apply_perturbation(delta, test.features, test.bounds, true));
  double nt = 0, ct = 0, at = 0, nn = 0, cn = 0, an = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const int y = test.labels[i];
    if (p.contains(y)) {
      nt += 1, ct += clean[i] == y, at += adv[i] == y;
    } else {
      nn += 1, cn += clean[i] == y, an += adv[i] == y;
    }
  }
  CHECK(r.n_t == static_cast<std::size_t>(nt));
  CHECK(r.acc_t == doctest::Approx(100.0 * ct / nt).epsilon(1e-12));
  CHECK(r.adv_acc_t == doctest::Approx(100.0 * at / nt).epsilon(1e-12));
  if (nn > 0) {
    REQUIRE(r.acc_nt.has_value());
    CHECK(r.n_nt == static_cast<std::size_t>(nn));
    CHECK(*r.acc_nt == doctest::Approx(100.0 * cn / nn).epsilon(1e-12));
    CHECK(*r.adv_acc_nt == doctest::Approx(100.0 * an / nn).epsilon(1e-12));
  }
}

void check_identities(const EvalReport& r) {
  CHECK(r.aad_t == r.acc_t - r.adv_acc_t);
  if (r.acc_nt) {
    CHECK(*r.aad_nt == *r.acc_nt - *r.adv_acc_nt);
    CHECK(*r.delta_aad == r.aad_t - *r.aad_nt);
  }
  for (double v : {r.acc_t, r.adv_acc_t}) {
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }
  CHECK(r.aad_t >= -100.0);
  CHECK(r.aad_t <= 100.0);
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("accuracy examples") {
    const LabeledDataset ds = gen_blobs(4, 25, 6, 0.05, 3);
    LabeledDataset perfect = ds;
    perfect.labels = predict(victim().model, ds.features);
    CHECK(accuracy(victim().model, perfect) == 100.0);

    MlpClassifier constant = MlpClassifier::init({6, 4}, 0);
    for (double& v : constant.weights[0].values()) v = 0;
    constant.biases[0][2] = 1;
    CHECK(accuracy(constant, ds) == doctest::Approx(100.0 / 4));
    CHECK(accuracy(constant, ds, std::vector<int>{2}) == 100.0);
    CHECK(accuracy(constant, ds, std::vector<int>{0, 1}) == 0.0);
    CHECK_THROWS_AS(accuracy(constant, ds, std::vector<int>{}), UsageError);
    CHECK_THROWS_AS(accuracy(constant, LabeledDataset{}), UsageError);
  }

  TEST_CASE("accuracy matches a brute-force count on 1000 samples") {
    const LabeledDataset ds = gen_blobs(4, 250, 6, 0.05, 8);
    const auto pred = predict(victim().model, ds.features);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) hits += pred[i] == ds.labels[i];
    CHECK(accuracy(victim().model, ds) == doctest::Approx(100.0 * hits / 1000.0).epsilon(1e-14));
  }

  TEST_CASE("zero perturbation gives zero drops") {
    const ClassPartition p = parse_class_spec("0:1", 4);
    const EvalReport r = evaluate_perturbation(victim().model, victim().test, p, Tensor({6}, 0.0));
    CHECK(r.aad_t == 0.0);
    CHECK(*r.aad_nt == 0.0);
    CHECK(*r.delta_aad == 0.0);
    CHECK(r.class_clean_correct == r.class_adv_correct);
  }

  TEST_CASE("identities and counts on randomized evaluations") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
      const int first = static_cast<int>(rng.index(3));
      const ClassPartition p = parse_class_spec(std::to_string(first) + ":" + std::to_string(first + 1), 4);
      const Tensor delta = testing::random_vector(rng, 6, -0.3, 0.3);
      const EvalReport r = evaluate_perturbation(victim().model, victim().test, p, delta);
      check_identities(r);
      if (trial % 10 == 0) check_against_counts(victim().model, victim().test, p, delta, r);
    }
  }

  TEST_CASE("all-class partition leaves non-targeted fields absent") {
    const ClassPartition p = parse_class_spec("all", 4);
    const EvalReport r = evaluate_perturbation(victim().model, victim().test, p, Tensor({6}, 0.2));
    CHECK_FALSE(r.acc_nt.has_value());
    CHECK_FALSE(r.aad_nt.has_value());
    CHECK_FALSE(r.delta_aad.has_value());
    CHECK(r.n_t == victim().test.size());
    CHECK(r.acc_t == accuracy(victim().model, victim().test));
  }

  TEST_CASE("evaluation ignores test-set order") {
    const ClassPartition p = parse_class_spec("1:2", 4);
    const Tensor delta = Tensor({6}, 0.1);
    const EvalReport a = evaluate_perturbation(victim().model, victim().test, p, delta);
    std::vector<std::size_t> order(victim().test.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(2);
    rng.shuffle(std::span<std::size_t>(order));
    const EvalReport b = evaluate_perturbation(victim().model, victim().test.subset(order), p, delta);
    CHECK(a == b);
  }

  TEST_CASE("loss matrix sweep has twelve labelled cells") {
    const auto cells = loss_matrix_sweep(victim().model, victim().train, victim().test,
                                         parse_class_spec("0:1", 4), quick());
    REQUIRE(cells.size() == 12);
    CHECK(cells[0].label == "ce/none");
    CHECK(cells[5].label == "logit/ce");
    CHECK(cells[11].label == "bl/bl");
    for (std::size_t i = 0; i < 12; ++i) {
      CAPTURE(cells[i].label);
      CHECK(cells[i].error.empty());
      REQUIRE(cells[i].report.has_value());
      CHECK(cells[i].config.loss.t_kind == kSweepRows[i / 4]);
      CHECK(cells[i].config.loss.nt_kind == kSweepColumns[i % 4]);
      check_identities(*cells[i].report);
    }
  }

  TEST_CASE("ablation emits the five rows in order") {
    const ClassPartition p = parse_class_spec("0", 4);
    const auto rows = ablation_sampling(victim().model, victim().train, victim().test, p, quick());
    REQUIRE(rows.size() == 5);
    CHECK(rows[0].label == "half-half");
    CHECK(rows[1].label == "pooled");
    CHECK(rows[2].label == "pooled-alpha-scaled");
    CHECK(rows[3].label == "pooled-beta-scaled");
    CHECK(rows[4].label == "targeted-only");
    CHECK(rows[0].config.sampling == SamplingMode::HalfHalf);
    CHECK(rows[1].config.sampling == SamplingMode::Pooled);
    const auto [t, nt] = partition_dataset(victim().train, p);
    const double ratio = static_cast<double>(nt.size()) / static_cast<double>(t.size());
    CHECK(rows[2].config.loss.alpha == doctest::Approx(ratio));
    CHECK(rows[2].config.loss.beta == 1.0);
    CHECK(rows[3].config.loss.alpha == 1.0);
    CHECK(rows[3].config.loss.beta == doctest::Approx(1.0 / ratio));
    CHECK(rows[4].config.loss.beta == 0.0);
    for (const auto& row : rows) CHECK(row.report.has_value());
  }

  TEST_CASE("transfer matrix shape and white-box diagonal") {
    const std::vector<MlpClassifier> models{victim(1).model, victim(2).model};
    const ClassPartition p = parse_class_spec("0:1", 4);
    const TransferMatrix tm = transfer_matrix(models, models, victim().train, victim().test, p, quick());
    CHECK(tm.rows == 2);
    CHECK(tm.cols == 2);
    CHECK(tm.cells.size() == 4);
    CHECK(tm.perturbations.size() == 2);
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t t = 0; t < 2; ++t) {
        CHECK(tm.at(s, t).white_box == (s == t));
        CHECK(tm.at(s, t).report ==
              evaluate_perturbation(models[t], victim().test, p, tm.perturbations[s].delta));
      }
  }
}
