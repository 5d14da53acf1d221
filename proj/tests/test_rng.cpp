#include <doctest.h>

#include <cmath>

#include "mvom/rng.hpp"

using namespace mvom;

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("unit conversion stays inside the open interval") {
  CHECK(NormalStream::to_unit(0, 0) > 0.0);
  CHECK(NormalStream::to_unit(0xffffffffu, 0xffffffffu) < 1.0);
}

TEST_CASE("normal streams are reproducible and distinct") {
  NormalStream a(42, RngStream::Trajectory, 7), b(42, RngStream::Trajectory, 7);
  NormalStream c(42, RngStream::Trajectory, 8), d(43, RngStream::Trajectory, 7), e(42, RngStream::Ensemble, 7);
  int differs = 0;
  for (int i = 0; i < 100; ++i) {
    const double x = a.next();
    CHECK(x == b.next());
    differs += (x != c.next()) + (x != d.next()) + (x != e.next());
  }
  CHECK(differs == 300);
}

TEST_CASE("normal moments") {
  NormalStream s(2024, RngStream::Ensemble, 0);
  const int count = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  int below = 0;
  for (int i = 0; i < count; ++i) {
    const double x = s.next();
    m1 += x;
    m2 += x * x;
    m4 += x * x * x * x;
    below += x < 1.0;
  }
  m1 /= count;
  m2 /= count;
  m4 /= count;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(count));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / count));
  CHECK(std::abs(m4 - 3.0) < 4.0 * std::sqrt(96.0 / count));
  const double phi1 = 0.5 * std::erfc(-1.0 / std::sqrt(2.0));
  CHECK(std::abs(below / double(count) - phi1) < 4.0 * std::sqrt(phi1 * (1 - phi1) / count));
}
