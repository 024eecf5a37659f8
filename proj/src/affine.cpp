// Copyright 2026 The pairsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pairsync/affine.hpp"

#include <cmath>

#include "pairsync/errors.hpp"

namespace pairsync
{

using boost::multiprecision::cpp_int;

Rational exact_rational(double x)
{
  if (!std::isfinite(x)) {
    throw ParameterError("non-finite coefficient");
  }
  int exp = 0;
  const double mant = std::frexp(x, &exp);
  // mant * 2^53 is an integer for any finite double.
  const auto m = static_cast<std::int64_t>(std::ldexp(mant, 53));
  exp -= 53;
  Rational r(m);
  if (exp > 0) {
    r *= Rational(cpp_int(1) << exp);
  } else if (exp < 0) {
    r /= Rational(cpp_int(1) << -exp);
  }
  return r;
}

double to_double(const Rational & r) { return r.convert_to<double>(); }

AffineMap::AffineMap(Rational scale, Rational offset) : scale_(std::move(scale)), offset_(std::move(offset))
{
  if (scale_ <= 0) {
    throw ParameterError("affine scale must be positive");
  }
}

AffineMap AffineMap::from_clock(const ClockModel & m)
{
  const Rational scale = 1 + exact_rational(m.delta_u);
  return {scale, scale * Rational(m.delta_T)};
}

AffineMap AffineMap::from_clock(double delta_T_ps, double delta_u)
{
  const Rational scale = 1 + exact_rational(delta_u);
  return {scale, scale * exact_rational(delta_T_ps)};
}

double AffineMap::delta_u() const { return to_double(scale_ - 1); }

double AffineMap::delta_T() const { return to_double(offset_ / scale_); }

ClockModel AffineMap::clock() const
{
  ClockModel m;
  m.delta_T = round_to_ps(static_cast<long double>(offset_ / scale_));
  m.delta_u = delta_u();
  return m;
}

AffineMap AffineMap::compose(const AffineMap & inner) const
{
  return {scale_ * inner.scale_, scale_ * inner.offset_ + offset_};
}

AffineMap AffineMap::inverse() const { return {1 / scale_, -offset_ / scale_}; }

Picoseconds AffineMap::to_b_time(Picoseconds t_a) const
{
  return round_to_ps(static_cast<long double>(scale_ * Rational(t_a) + offset_));
}

Picoseconds AffineMap::to_a_time(Picoseconds t_b) const
{
  return round_to_ps(static_cast<long double>((Rational(t_b) - offset_) / scale_));
}

}  // namespace pairsync
