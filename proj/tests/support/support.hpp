#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "embench/ingest.hpp"

namespace embench::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("embench-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string row_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r%05zu", i);
  return buf;
}

// Isotropic Gaussian blobs; row ids r00000.. in generation order, labels
// give the blob index.
struct Blobs {
  EmbeddingMatrix x;
  std::vector<int> labels;
};

inline Blobs make_blobs(const std::vector<std::vector<double>>& centers, std::size_t per_blob, double sd,
                        std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, sd);
  const std::size_t d = centers.front().size();
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<int> labels;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      ids.push_back(row_id(ids.size()));
      for (std::size_t j = 0; j < d; ++j) values.push_back(centers[b][j] + noise(gen));
      labels.push_back(static_cast<int>(b));
    }
  }
  return {EmbeddingMatrix(std::move(ids), std::move(values), d), std::move(labels)};
}

inline EmbeddingMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::string> ids;
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(row_id(i));
    for (std::size_t j = 0; j < d; ++j) values.push_back(g(gen));
  }
  return EmbeddingMatrix(std::move(ids), std::move(values), d);
}

// Dense symmetric eigendecomposition by cyclic Jacobi rotations. Returns
// eigenvalues descending with eigenvectors as rows.
struct SymEigen {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;
};

inline SymEigen jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return a[x][x] > a[y][y]; });
  SymEigen out;
  for (std::size_t idx : order) {
    out.values.push_back(a[idx][idx]);
    std::vector<double> vec(n);
    for (std::size_t k = 0; k < n; ++k) vec[k] = v[k][idx];
    out.vectors.push_back(std::move(vec));
  }
  return out;
}

// Population covariance (1/n) of the rows.
inline std::vector<std::vector<double>> covariance(const EmbeddingMatrix& x) {
  const std::size_t n = x.rows(), d = x.dim();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x.row(i)[j] / static_cast<double>(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = 0; q < d; ++q)
        c[p][q] += (x.row(i)[p] - mean[p]) * (x.row(i)[q] - mean[q]) / static_cast<double>(n);
  return c;
}

// Two-sided Student-t tail P(|T| > t) = I_u(df/2, 1/2) with u = df/(df+t^2),
// the regularized incomplete beta evaluated by composite Simpson
// integration of its kernel. Valid for df >= 2.
inline double t_two_sided_by_integration(double t, double df) {
  const double u_max = df / (df + t * t);
  const double a = df / 2.0, b = 0.5;
  const double log_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  auto f = [&](double u) {
    if (u <= 0.0) return a == 1.0 ? std::exp(-log_beta) : 0.0;
    return std::exp((a - 1.0) * std::log(u) + (b - 1.0) * std::log1p(-u) - log_beta);
  };
  const int steps = 200000;
  const double h = u_max / steps;
  double sum = f(0.0) + f(u_max);
  for (int i = 1; i < steps; ++i) sum += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

// 82 pairs whose differences have mean 1.25201 and sample sd 0.51773
// exactly: 41 at mean + sd*c and 41 at mean - sd*c with c = sqrt(81/82).
// Condition b is centred on 2.5239 with the same +-c pattern, alternating.
struct PairedReferenceFixture {
  std::vector<double> a, b;
};

inline PairedReferenceFixture paired_reference_fixture() {
  const double c = std::sqrt(81.0 / 82.0);
  PairedReferenceFixture f;
  for (int i = 0; i < 82; ++i) {
    const double d = 1.25201 + (i < 41 ? 1.0 : -1.0) * 0.51773 * c;
    const double b = 2.5239 + (i % 2 == 0 ? 1.0 : -1.0) * 0.61724 * c;
    f.b.push_back(b);
    f.a.push_back(b + d);
  }
  return f;
}

}  // namespace embench::testing
