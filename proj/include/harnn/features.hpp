// Sliding-window feature extraction for the comparative baseline: 5 s
// windows shifted by 2.5 s, 27 statistics per window, and the fixed
// 13-element subset used by the window classifier.
//
// Feature enumeration (1-based, names in kFeatureNames):
//   1-3   per-axis means
//   4-6   per-axis variances (population, 1/N)
//   7     mean of |x|+|y|+|z|
//   8-9   two largest eigenvalues of the 3x3 axis covariance matrix
//   10    mean |vertical|/intensity; vertical = axis of largest |mean|
//   11-13 cov(x,y)/var(z), cov(y,z)/var(x), cov(z,x)/var(y)
//   14-16 first-difference variance ratios x/z, y/z, intensity/z
//   17-20 mean squared DFT magnitude, DC excluded (x, y, z, intensity)
//   21-24 Shannon entropy (natural log) of the DC-excluded power spectrum
//   25    sign changes of (intensity - mean intensity)
//   26    crossings into/out of the band mean +- 0.1 G on intensity
//   27    samples outside that band
//
// Conventions where a formula admits several readings (each pinned by a
// unit test): variances and covariances divide by N; ratio denominators
// are floored at 1e-12; the spectrum covers bins 1..floor(N/2) of the
// mean-removed series; an exactly constant series has zero energy and
// zero entropy; ties in the vertical-axis and majority-label picks go to
// the lowest index; zero-intensity samples are skipped by feature 10.
#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "harnn/dataset.hpp"
#include "harnn/matrix.hpp"

namespace harnn {

inline constexpr std::size_t kFeatureCount = 27;
inline constexpr std::size_t kSelectedCount = 13;

using FeatureVector = std::array<double, kFeatureCount>;
using SelectedFeatures = std::array<double, kSelectedCount>;

// Fixed subset {1,2,6,7,9,11,12,13,15,20,21,24,26} of the 1-based numbering
// above, stored 0-based.
inline constexpr std::array<std::size_t, kSelectedCount> kSelectedFeatureIndices = {
    0, 1, 5, 6, 8, 10, 11, 12, 14, 19, 20, 23, 25};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "mean_x",          "mean_y",          "mean_z",           "var_x",
    "var_y",           "var_z",           "abs_sum_mean",     "cov_eig1",
    "cov_eig2",        "vertical_ratio",  "cov_xy_over_var_z", "cov_yz_over_var_x",
    "cov_zx_over_var_y", "diffvar_x_over_z", "diffvar_y_over_z", "diffvar_int_over_z",
    "fft_energy_x",    "fft_energy_y",    "fft_energy_z",     "fft_energy_int",
    "fft_entropy_x",   "fft_entropy_y",   "fft_entropy_z",    "fft_entropy_int",
    "mean_crossings",  "zone_crossings",  "out_of_zone"};

inline constexpr double kRatioFloor = 1e-12;
inline constexpr double kZoneHalfWidth = 0.1;  // G, the mean +- 0.1 band

struct WindowSpec {
  double window_seconds = 5.0;
  double shift_seconds = 2.5;
  double sample_rate = 100.0;

  void validate() const {
    require(window_seconds > 0 && shift_seconds > 0 && sample_rate > 0,
            "WindowSpec: durations and rate must be positive");
    require(shift_seconds <= window_seconds, "WindowSpec: shift must not exceed the window");
  }
  std::size_t window_samples() const {
    return static_cast<std::size_t>(std::llround(window_seconds * sample_rate));
  }
  std::size_t shift_samples() const {
    return static_cast<std::size_t>(std::llround(shift_seconds * sample_rate));
  }
};

struct Window {
  std::vector<Sample> samples;
  int label = 0;
};

/// Windows at offsets 0, S, 2S, ...; a trailing partial window is dropped.
/// The label is the majority of the per-sample labels (lowest class wins
/// ties); for segmented trials it is simply the trial class.
inline std::vector<Window> extract_windows(const Trial& trial, const WindowSpec& spec,
                                           std::size_t num_classes) {
  spec.validate();
  const std::size_t w = spec.window_samples();
  const std::size_t s = spec.shift_samples();
  require(trial.samples.size() >= w, "extract_windows: trial " + trial.id + " has " +
                                         std::to_string(trial.samples.size()) +
                                         " samples, need >= " + std::to_string(w));
  std::vector<Window> out;
  for (std::size_t start = 0; start + w <= trial.samples.size(); start += s) {
    Window win;
    win.samples.assign(trial.samples.begin() + static_cast<std::ptrdiff_t>(start),
                       trial.samples.begin() + static_cast<std::ptrdiff_t>(start + w));
    if (trial.segmented()) {
      win.label = *trial.label;
    } else {
      std::vector<std::size_t> votes(num_classes, 0);
      for (std::size_t i = start; i < start + w; ++i) {
        const int c = trial.label_at(i);
        require(c >= 0 && static_cast<std::size_t>(c) < num_classes,
                "extract_windows: label out of range in trial " + trial.id);
        ++votes[static_cast<std::size_t>(c)];
      }
      win.label = static_cast<int>(
          std::max_element(votes.begin(), votes.end()) - votes.begin());
    }
    out.push_back(std::move(win));
  }
  return out;
}

namespace detail {

inline double mean_of(std::span<const double> s) {
  double sum = 0.0;
  for (double v : s) sum += v;
  return sum / static_cast<double>(s.size());
}

/// Population variance (1/N).
inline double variance_of(std::span<const double> s, double mean) {
  double sum = 0.0;
  for (double v : s) sum += (v - mean) * (v - mean);
  return sum / static_cast<double>(s.size());
}

inline double covariance_of(std::span<const double> a, double ma, std::span<const double> b,
                            double mb) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += (a[i] - ma) * (b[i] - mb);
  return sum / static_cast<double>(a.size());
}

inline std::vector<double> first_differences(std::span<const double> s) {
  std::vector<double> d;
  if (s.size() >= 2) {
    d.reserve(s.size() - 1);
    for (std::size_t i = 1; i < s.size(); ++i) d.push_back(s[i] - s[i - 1]);
  }
  return d;
}

inline double variance_of_diffs(std::span<const double> s) {
  const std::vector<double> d = first_differences(s);
  if (d.empty()) return 0.0;
  return variance_of(d, mean_of(d));
}

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric closed form,
/// returned in descending order.
inline std::array<double, 3> symmetric_eigenvalues_3x3(const std::array<std::array<double, 3>, 3>& a) {
  const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  std::array<double, 3> eig;
  if (off == 0.0) {
    eig = {a[0][0], a[1][1], a[2][2]};
  } else {
    const double q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    const double p2 = (a[0][0] - q) * (a[0][0] - q) + (a[1][1] - q) * (a[1][1] - q) +
                      (a[2][2] - q) * (a[2][2] - q) + 2.0 * off;
    const double p = std::sqrt(p2 / 6.0);
    std::array<std::array<double, 3>, 3> b{};
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) b[r][c] = (a[r][c] - (r == c ? q : 0.0)) / p;
    const double detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                        b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                        b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    const double r = std::clamp(detb / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    eig[0] = q + 2.0 * p * std::cos(phi);
    eig[2] = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
    eig[1] = 3.0 * q - eig[0] - eig[2];
  }
  std::sort(eig.begin(), eig.end(), std::greater<>());
  return eig;
}

struct SpectralStats {
  double mean_energy = 0.0;
  double entropy = 0.0;
};

/// Direct DFT of the mean-removed series over bins 1..floor(N/2) using a
/// shared twiddle table (index k*t mod N walks the table incrementally).
/// An exactly constant series maps to zero energy and zero entropy.
inline SpectralStats spectral_stats(std::span<const double> s) {
  const std::size_t n = s.size();
  const std::size_t half = n / 2;
  if (half == 0) return {};
  const auto [mn, mx] = std::minmax_element(s.begin(), s.end());
  if (*mn == *mx) return {};

  const double mean = mean_of(s);
  std::vector<double> c(n), cos_t(n), sin_t(n);
  for (std::size_t t = 0; t < n; ++t) {
    c[t] = s[t] - mean;
    const double ang = -2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n);
    cos_t[t] = std::cos(ang);
    sin_t[t] = std::sin(ang);
  }

  std::vector<double> energy(half);
  double total = 0.0;
  for (std::size_t k = 1; k <= half; ++k) {
    double re = 0.0, im = 0.0;
    std::size_t idx = 0;
    for (std::size_t t = 0; t < n; ++t) {
      re += c[t] * cos_t[idx];
      im += c[t] * sin_t[idx];
      idx += k;
      if (idx >= n) idx -= n;
    }
    energy[k - 1] = re * re + im * im;
    total += energy[k - 1];
  }

  SpectralStats out;
  out.mean_energy = total / static_cast<double>(half);
  if (total > 0.0) {
    double h = 0.0;
    for (double e : energy) {
      if (e <= 0.0) continue;
      const double p = e / total;
      h -= p * std::log(p);
    }
    out.entropy = h;
  }
  return out;
}

}  // namespace detail

inline FeatureVector compute_features(std::span<const Sample> window) {
  require(!window.empty(), "compute_features: empty window");
  const std::size_t n = window.size();
  std::array<std::vector<double>, 3> axis;
  std::vector<double> intensity(n), abs_sum(n);
  for (auto& a : axis) a.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Sample& s = window[i];
    axis[0][i] = s.ax;
    axis[1][i] = s.ay;
    axis[2][i] = s.az;
    intensity[i] = std::sqrt(s.ax * s.ax + s.ay * s.ay + s.az * s.az);
    abs_sum[i] = std::abs(s.ax) + std::abs(s.ay) + std::abs(s.az);
  }

  FeatureVector f{};
  std::array<double, 3> mean, var;
  for (int a = 0; a < 3; ++a) {
    mean[a] = detail::mean_of(axis[a]);
    var[a] = detail::variance_of(axis[a], mean[a]);
    f[static_cast<std::size_t>(a)] = mean[a];
    f[static_cast<std::size_t>(3 + a)] = var[a];
  }
  f[6] = detail::mean_of(abs_sum);

  std::array<std::array<double, 3>, 3> cov{};
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      cov[r][c] = r == c ? var[r]
                         : detail::covariance_of(axis[r], mean[r], axis[c], mean[c]);
  const auto eig = detail::symmetric_eigenvalues_3x3(cov);
  f[7] = eig[0];
  f[8] = eig[1];

  // Vertical axis: largest mean magnitude, lowest index on ties.
  int vert = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(mean[a]) > std::abs(mean[vert])) vert = a;
  double ratio_sum = 0.0;
  std::size_t ratio_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (intensity[i] == 0.0) continue;
    ratio_sum += std::abs(axis[static_cast<std::size_t>(vert)][i]) / intensity[i];
    ++ratio_n;
  }
  f[9] = ratio_n == 0 ? 0.0 : ratio_sum / static_cast<double>(ratio_n);

  f[10] = cov[0][1] / std::max(var[2], kRatioFloor);
  f[11] = cov[1][2] / std::max(var[0], kRatioFloor);
  f[12] = cov[2][0] / std::max(var[1], kRatioFloor);

  const double dvar_z = std::max(detail::variance_of_diffs(axis[2]), kRatioFloor);
  f[13] = detail::variance_of_diffs(axis[0]) / dvar_z;
  f[14] = detail::variance_of_diffs(axis[1]) / dvar_z;
  f[15] = detail::variance_of_diffs(intensity) / dvar_z;

  const std::array<std::span<const double>, 4> series = {axis[0], axis[1], axis[2], intensity};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto st = detail::spectral_stats(series[i]);
    f[16 + i] = st.mean_energy;
    f[20 + i] = st.entropy;
  }

  const double mi = detail::mean_of(intensity);
  std::size_t sign_changes = 0, zone_crossings = 0, outside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = intensity[i] - mi;
    if (i > 0 && (intensity[i - 1] - mi) * d < 0.0) ++sign_changes;
    const bool out = std::abs(d) > kZoneHalfWidth;
    if (out) ++outside;
    if (i > 0) {
      const bool prev_out = std::abs(intensity[i - 1] - mi) > kZoneHalfWidth;
      if (out != prev_out) ++zone_crossings;
    }
  }
  f[24] = static_cast<double>(sign_changes);
  f[25] = static_cast<double>(zone_crossings);
  f[26] = static_cast<double>(outside);
  return f;
}

inline SelectedFeatures select_features(const FeatureVector& fv) {
  SelectedFeatures out;
  for (std::size_t i = 0; i < kSelectedCount; ++i) out[i] = fv[kSelectedFeatureIndices[i]];
  return out;
}

/// Feature dump: 27 named columns plus the window label, one row per window.
inline void write_features_csv(const std::filesystem::path& path,
                               std::span<const FeatureVector> rows, std::span<const int> labels) {
  require(rows.size() == labels.size(), "write_features_csv: row/label count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_features_csv: cannot open " + path.string());
  for (std::size_t i = 0; i < kFeatureCount; ++i) out << kFeatureNames[i] << ',';
  out << "label\n";
  char buf[40];
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (double v : rows[r]) {
      auto res = std::to_chars(buf, buf + sizeof(buf), v);
      out.write(buf, res.ptr - buf);
      out << ',';
    }
    out << labels[r] << '\n';
  }
}

}  // namespace harnn
