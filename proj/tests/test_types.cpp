#include <doctest.h>

#include "gaplm/types.hpp"
#include "helpers.hpp"

using namespace gaplm;

TEST_CASE("validate_dataset accepts a well-formed dataset") {
  const ClusterDataset ds = testutil::random_dataset(5, 4, 2, 3, 7);
  CHECK(validate_dataset(ds).ok());
}

TEST_CASE("validate_dataset flags X outside [0,1]") {
  ClusterDataset ds = testutil::random_dataset(3, 2, 2, 2, 1);
  ds.clusters[1].x(0, 0) = 1.2;
  const auto report = validate_dataset(ds);
  CHECK_FALSE(report.ok());
}

TEST_CASE("validate_dataset flags a broken intercept column") {
  ClusterDataset ds = testutil::random_dataset(3, 2, 1, 2, 2);
  ds.clusters[0].z(1, 0) = 0.0;
  CHECK_FALSE(validate_dataset(ds).ok());
}

TEST_CASE("validate_dataset flags row-count mismatches") {
  ClusterDataset ds = testutil::random_dataset(3, 3, 1, 2, 3);
  ds.clusters[2].y.conservativeResize(2);
  CHECK_FALSE(validate_dataset(ds).ok());
}

TEST_CASE("pack/unpack round trip") {
  Theta theta;
  theta.beta = Vector(3);
  theta.beta << 1.0, -2.0, 0.5;
  theta.gamma = {Vector::LinSpaced(4, 0.0, 3.0), Vector::LinSpaced(4, -1.0, 2.0)};
  const Vector packed = theta.pack();
  REQUIRE(packed.size() == 11);
  CHECK(packed[0] == 1.0);
  CHECK(packed[3] == theta.gamma[0][0]);
  CHECK(packed[10] == theta.gamma[1][3]);
  const Theta back = Theta::unpack(packed, 3, 2, 4);
  CHECK((back.pack() - packed).norm() == 0.0);
}

TEST_CASE("pack/unpack round trip on random layouts") {
  gaplm::Rng rng(99);
  for (int rep = 0; rep < 20; ++rep) {
    const int d_z = 1 + static_cast<int>(rng.uniform(0, 5));
    const int d_x = static_cast<int>(rng.uniform(0, 4));
    const int j_n = 2 + static_cast<int>(rng.uniform(0, 4));
    Theta theta;
    theta.beta = rng.normal_vector(d_z);
    for (int l = 0; l < d_x; ++l) theta.gamma.push_back(rng.normal_vector(j_n));
    const Vector packed = theta.pack();
    REQUIRE(packed.size() == d_z + d_x * j_n);
    const Theta back = Theta::unpack(packed, d_z, d_x, j_n);
    CHECK((back.pack() - packed).norm() == 0.0);
  }
}

TEST_CASE("unpack rejects a length mismatch") {
  CHECK_THROWS(Theta::unpack(Vector::Zero(7), 2, 2, 3));
}

TEST_CASE("subset_columns keeps requested columns in order") {
  const ClusterDataset ds = testutil::random_dataset(4, 3, 3, 4, 5);
  const ClusterDataset sub = subset_columns(ds, {2, 0}, {0, 3});
  CHECK(sub.d_x == 2);
  CHECK(sub.d_z == 2);
  CHECK(sub.n_clusters() == 4);
  CHECK(sub.clusters[1].x(0, 0) == ds.clusters[1].x(0, 2));
  CHECK(sub.clusters[1].x(2, 1) == ds.clusters[1].x(2, 0));
  CHECK(sub.clusters[3].z(1, 1) == ds.clusters[3].z(1, 3));
  CHECK(sub.clusters[3].y == ds.clusters[3].y);
}
