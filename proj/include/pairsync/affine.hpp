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

#ifndef PAIRSYNC_AFFINE_HPP_
#define PAIRSYNC_AFFINE_HPP_

#include <boost/multiprecision/cpp_int.hpp>

#include "pairsync/timebase.hpp"

namespace pairsync
{

using Rational = boost::multiprecision::cpp_rational;

/// Exact affine map from A time to B time, b = scale * a + offset, with
/// rational coefficients so that repeated corrections compose without drift.
/// In clock-model terms scale = 1 + delta_u and offset = (1 + delta_u) * delta_T.
class AffineMap
{
public:
  AffineMap() : scale_(1), offset_(0) {}
  AffineMap(Rational scale, Rational offset);

  static AffineMap identity() { return {}; }
  /// The drift-free part of a clock model, converted exactly.
  static AffineMap from_clock(const ClockModel & m);
  static AffineMap from_clock(double delta_T_ps, double delta_u);

  const Rational & scale() const { return scale_; }
  const Rational & offset() const { return offset_; }

  double delta_u() const;
  /// offset / scale, in ps.
  double delta_T() const;
  ClockModel clock() const;

  /// (*this)(inner(a)).
  AffineMap compose(const AffineMap & inner) const;
  AffineMap inverse() const;

  /// Forward map of one tag, rounded to the nearest ps.
  Picoseconds to_b_time(Picoseconds t_a) const;
  /// Inverse map of one tag, rounded to the nearest ps.
  Picoseconds to_a_time(Picoseconds t_b) const;

  friend bool operator==(const AffineMap &, const AffineMap &) = default;

private:
  Rational scale_;
  Rational offset_;
};

/// Rational equal to a finite double, exactly.
Rational exact_rational(double x);
double to_double(const Rational & r);

}  // namespace pairsync

#endif  // PAIRSYNC_AFFINE_HPP_
