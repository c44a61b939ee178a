#include <doctest.h>

#include <cmath>
#include <random>

#include "hops/errors.hpp"
#include "hops/matching.hpp"
#include "oracles.hpp"

using namespace hops;

namespace {

DistanceMatrix matrix_of(std::vector<std::vector<double>> rows) {
  DistanceMatrix m;
  m.query_count = rows.size();
  m.reference_count = rows.front().size();
  for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
  return m;
}

DistanceMatrix random_matrix(std::size_t q, std::size_t r, std::uint64_t seed, int levels = 0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> coarse(0, levels);
  DistanceMatrix m;
  m.query_count = q;
  m.reference_count = r;
  m.values.resize(q * r);
  // Coarse levels force plenty of ties.
  for (auto& v : m.values) v = levels ? 2.0 * coarse(rng) / levels : u(rng);
  return m;
}

}  // namespace

TEST_CASE("cosine distance special values") {
  const std::vector<float> e1 = {1, 0, 0}, e2 = {0, 1, 0}, neg = {-1, 0, 0}, zero = {0, 0, 0};
  CHECK(cosine_distance(e1, e1) == 0.0);
  CHECK(cosine_distance(e1, e2) == 1.0);
  CHECK(cosine_distance(e1, neg) == 2.0);
  CHECK(cosine_distance(e1, zero) == 1.0);
  CHECK_THROWS_AS(cosine_distance(e1, std::vector<float>{1, 0}), DimensionError);
}

TEST_CASE("cosine_distance_matrix agrees with a long-double oracle") {
  const auto q = testing::random_set(7, 33, 1);
  const auto r = testing::random_set(9, 33, 2);
  const auto dm = cosine_distance_matrix(q, r);
  REQUIRE(dm.query_count == 7);
  REQUIRE(dm.reference_count == 9);
  for (std::size_t i = 0; i < 7; ++i) {
    for (std::size_t j = 0; j < 9; ++j) {
      const double expect = 1.0 - static_cast<double>(testing::cosine_ld(q.row(i).data(), r.row(j).data(), 33));
      CHECK(std::abs(dm.at(i, j) - expect) < 1e-12);
      CHECK(dm.at(i, j) >= 0.0);
      CHECK(dm.at(i, j) <= 2.0);
    }
  }
  CHECK_THROWS_AS(cosine_distance_matrix(q, testing::random_set(2, 34, 3)), DimensionError);
}

TEST_CASE("distance matrix is symmetric under transposition") {
  const auto a = testing::random_set(12, 70, 5);
  const auto b = testing::random_set(15, 70, 6);
  const auto ab = cosine_distance_matrix(a, b);
  const auto ba = cosine_distance_matrix(b, a);
  for (std::size_t i = 0; i < 12; ++i) {
    for (std::size_t j = 0; j < 15; ++j) CHECK(std::abs(ab.at(i, j) - ba.at(j, i)) <= 1e-12);
  }
}

TEST_CASE("best_match") {
  CHECK(best_match(matrix_of({{0.3, 0.1, 0.2}})) == std::vector<std::uint32_t>{1});
  CHECK(best_match(matrix_of({{0.2, 0.2}})) == std::vector<std::uint32_t>{0});

  for (int levels : {0, 3}) {
    const auto m = random_matrix(50, 50, 17 + levels, levels);
    const auto got = best_match(m);
    for (std::size_t q = 0; q < 50; ++q) {
      const std::vector<double> row(m.row(q).begin(), m.row(q).end());
      REQUIRE(got[q] == testing::argmin_scan(row));
    }
  }
}

TEST_CASE("rank orders by distance then index") {
  const auto r = rank(matrix_of({{0.5, 0.1, 0.5, 0.0, 0.1}}));
  CHECK(r.lists[0] == std::vector<std::uint32_t>{3, 1, 4, 0, 2});
  const auto top2 = rank(matrix_of({{0.5, 0.1, 0.5, 0.0, 0.1}}), 2);
  CHECK(top2.lists[0] == std::vector<std::uint32_t>{3, 1});

  const auto m = random_matrix(20, 30, 4, 4);
  const auto full = rank(m);
  for (const auto& list : full.lists) {
    std::vector<std::uint32_t> sorted = list;
    std::sort(sorted.begin(), sorted.end());
    for (std::uint32_t i = 0; i < sorted.size(); ++i) REQUIRE(sorted[i] == i);
  }
}

TEST_CASE("scale invariance of best_match") {
  const auto q = testing::random_set(10, 24, 8);
  const auto r = testing::random_set(30, 24, 9);
  std::vector<float> scaled(r.data().begin(), r.data().end());
  std::mt19937 rng(2);
  std::uniform_real_distribution<float> factor(0.01f, 100.0f);
  for (std::size_t i = 0; i < r.count(); ++i) {
    const float f = factor(rng);
    for (std::size_t j = 0; j < 24; ++j) scaled[i * 24 + j] *= f;
  }
  const auto rs = DescriptorSet::from_rows("d", "scaled", 24, scaled);
  CHECK(best_match(cosine_distance_matrix(q, r)) == best_match(cosine_distance_matrix(q, rs)));
}

TEST_CASE("pooled matching") {
  CHECK(pooled_location(7, 3).place == 1);
  CHECK(pooled_location(7, 3).set == 2);

  const auto q = testing::random_set(6, 16, 1, "q");
  const auto a = testing::random_set(6, 16, 2, "a");
  const auto b = testing::random_set(6, 16, 3, "b");

  SUBCASE("K=1 equals single-reference ranking") {
    const auto pooled = pooled_match(q, std::vector<DescriptorSet>{a});
    CHECK(pooled.place_ranking().lists == rank(cosine_distance_matrix(q, a)).lists);
  }
  SUBCASE("duplicated set does not change the best place") {
    const auto single = best_match(cosine_distance_matrix(q, a));
    const auto pooled = pooled_match(q, std::vector<DescriptorSet>{a, a.with_ids("d", "a2")});
    CHECK(pooled.distances.reference_count == 12);
    const auto best_pooled = best_match(pooled.distances);
    for (std::size_t i = 0; i < 6; ++i) {
      // Duplicate columns tie; the smaller pooled index (set 0) wins the tie.
      CHECK(pooled.locate(best_pooled[i]).set == 0);
      CHECK(pooled.locate(best_pooled[i]).place == single[i]);
      CHECK(pooled.place_ranking().lists[i].front() == single[i]);
    }
  }
  SUBCASE("place ranking is a permutation of places") {
    const auto pooled = pooled_match(q, std::vector<DescriptorSet>{a, b});
    for (const auto& list : pooled.place_ranking().lists) {
      std::vector<std::uint32_t> sorted = list;
      std::sort(sorted.begin(), sorted.end());
      CHECK(sorted == std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5});
    }
  }
  SUBCASE("misaligned sets") {
    CHECK_THROWS_AS(pooled_match(q, std::vector<DescriptorSet>{a, testing::random_set(5, 16, 4, "c")}),
                    AlignmentError);
  }
}

TEST_CASE("aggregate_distances") {
  SUBCASE("mean of two rows ties and breaks to index 0") {
    const std::vector<DistanceMatrix> per = {matrix_of({{0.2, 0.4}}), matrix_of({{0.4, 0.2}})};
    const auto mean = aggregate_distances(per, AggregateMode::mean);
    CHECK(mean.values[0] == doctest::Approx(0.3));
    CHECK(mean.values[1] == doctest::Approx(0.3));
    CHECK(best_match(mean) == std::vector<std::uint32_t>{0});
  }
  SUBCASE("K=1 is the identity for every mode") {
    const auto m = random_matrix(5, 5, 3);
    for (auto mode : {AggregateMode::mean, AggregateMode::min, AggregateMode::max, AggregateMode::median}) {
      CHECK(aggregate_distances(std::vector<DistanceMatrix>{m}, mode).values == m.values);
    }
  }
  SUBCASE("element-wise oracle for K=3 and K=4") {
    for (std::size_t k : {3u, 4u}) {
      std::vector<DistanceMatrix> per;
      for (std::size_t i = 0; i < k; ++i) per.push_back(random_matrix(10, 10, 40 + i));
      const auto mean = aggregate_distances(per, AggregateMode::mean);
      const auto mn = aggregate_distances(per, AggregateMode::min);
      const auto mx = aggregate_distances(per, AggregateMode::max);
      const auto med = aggregate_distances(per, AggregateMode::median);
      for (std::size_t e = 0; e < 100; ++e) {
        std::vector<double> v;
        double sum = 0.0;
        for (const auto& m : per) {
          v.push_back(m.values[e]);
          sum += m.values[e];
        }
        std::sort(v.begin(), v.end());
        CHECK(mean.values[e] == sum / static_cast<double>(k));
        CHECK(mn.values[e] == v.front());
        CHECK(mx.values[e] == v.back());
        const double median = k % 2 ? v[k / 2] : (v[k / 2 - 1] + v[k / 2]) / 2.0;
        CHECK(med.values[e] == median);
      }
    }
  }
  SUBCASE("mean of K copies reproduces the matrix") {
    const auto m = random_matrix(8, 8, 5);
    for (std::size_t k : {2u, 3u, 7u}) {
      const std::vector<DistanceMatrix> copies(k, m);
      const auto mean = aggregate_distances(copies, AggregateMode::mean);
      for (std::size_t e = 0; e < m.values.size(); ++e) CHECK(std::abs(mean.values[e] - m.values[e]) <= 1e-15);
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(aggregate_distances(std::vector<DistanceMatrix>{}, AggregateMode::mean), EmptyInputError);
    const std::vector<DistanceMatrix> bad = {random_matrix(2, 3, 1), random_matrix(2, 4, 2)};
    CHECK_THROWS_AS(aggregate_distances(bad, AggregateMode::mean), ShapeError);
    CHECK_THROWS_AS(parse_aggregate_mode("mode"), UsageError);
  }
}

TEST_CASE("identify_dataset") {
  DatasetSignature a{"A", 4, {1, 1, 0, 0}};
  DatasetSignature b{"B", 4, {0, 0, 1, 1}};
  const std::vector<float> e1 = {1, 0, 0, 0};

  const std::vector<DatasetSignature> both = {a, b};
  const auto id = identify_dataset(e1, both);
  CHECK(id.dataset_id == "A");
  CHECK(id.similarities[0] == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(id.similarities[1] == 0.0);

  const std::vector<DatasetSignature> only_b = {b};
  CHECK(identify_dataset(e1, only_b).dataset_id == "B");

  // Ties go to the first signature in list order.
  const std::vector<DatasetSignature> tied = {b, DatasetSignature{"C", 4, {0, 0, 1, 1}}};
  CHECK(identify_dataset(e1, tied).dataset_id == "B");

  CHECK_THROWS_AS(identify_dataset(std::vector<float>{1, 0}, both), DimensionError);
}

TEST_CASE("identify_dataset on synthetic clusters agrees with the nearest-signature oracle") {
  const std::size_t n = 256, clusters = 3, per_cluster = 100;
  const auto centers = testing::random_unit_rows(clusters, n, 7);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> noise(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  std::vector<DatasetSignature> signatures;
  for (std::size_t c = 0; c < clusters; ++c) {
    // Signature = sum of 50 noisy members of the cluster.
    DatasetSignature sig{"D" + std::to_string(c), n, std::vector<double>(n, 0.0)};
    for (int m = 0; m < 50; ++m) {
      for (std::size_t j = 0; j < n; ++j) sig.vector[j] += centers[c * n + j] + noise(rng);
    }
    signatures.push_back(sig);
  }
  std::size_t agree = 0, correct = 0, total = 0;
  for (std::size_t c = 0; c < clusters; ++c) {
    for (std::size_t q = 0; q < per_cluster; ++q) {
      std::vector<float> query(n);
      for (std::size_t j = 0; j < n; ++j) query[j] = static_cast<float>(centers[c * n + j] + noise(rng));
      const auto got = identify_dataset(query, signatures);
      // Oracle: maximum cosine in long double.
      std::size_t best = 0;
      long double best_cos = -2.0L;
      for (std::size_t s = 0; s < clusters; ++s) {
        std::vector<float> sig(signatures[s].vector.begin(), signatures[s].vector.end());
        const auto cos = testing::cosine_ld(query.data(), sig.data(), n);
        if (cos > best_cos) {
          best_cos = cos;
          best = s;
        }
      }
      agree += got.index == best;
      correct += got.index == c;
      ++total;
    }
  }
  CHECK(static_cast<double>(agree) / total >= 0.99);
  CHECK(static_cast<double>(correct) / total >= 0.99);
}

TEST_CASE("distance evaluation counter") {
  const auto q = testing::random_set(3, 8, 1);
  const auto r = testing::random_set(5, 8, 2);
  reset_distance_evaluations();
  cosine_distance_matrix(q, r);
  CHECK(distance_evaluations() == 15);
  pooled_match(q, std::vector<DescriptorSet>{r, r.with_ids("d", "r2")});
  CHECK(distance_evaluations() == 15 + 30);
}
