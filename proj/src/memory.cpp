#include "realid/memory.hpp"

#include <cstdio>
#include <stdexcept>

#include "realid/csv.hpp"

namespace realid {

const char* class_role_name(ClassRole role) {
  return role == ClassRole::kReal ? "real" : "fake";
}

MemoryBank init_bank(std::size_t prototype_count, std::size_t feature_dim,
                     ClassRole role, SeededRng& rng) {
  if (prototype_count < 2) throw std::invalid_argument("init_bank: need at least 2 prototypes");
  if (feature_dim == 0) throw std::invalid_argument("init_bank: feature_dim must be positive");
  MemoryBank bank;
  bank.role = role;
  bank.prototype_count = prototype_count;
  bank.feature_dim = feature_dim;
  bank.prototypes.reserve(prototype_count);
  for (std::size_t k = 0; k < prototype_count; ++k) {
    Vector p = rng_gaussian(rng, feature_dim);
    bool degenerate = false;
    p = l2_normalize(p, &degenerate);
    while (degenerate) {  // astronomically unlikely, but keep the invariant
      p = l2_normalize(rng_gaussian(rng, feature_dim), &degenerate);
    }
    bank.prototypes.push_back(std::move(p));
  }
  return bank;
}

CorrelationTensors correlate(const MemoryBank& bank, const Matrix& features) {
  if (features.rows == 0) throw std::invalid_argument("correlate: empty feature batch");
  if (features.cols != bank.feature_dim) {
    throw std::invalid_argument("correlate: feature dim mismatch");
  }
  const std::size_t k = bank.prototype_count;
  const std::size_t n = features.rows;
  CorrelationTensors corr;
  corr.raw = Matrix(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    const Vector& m = bank.prototypes[i];
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < features.cols; ++c) s += m[c] * features(j, c);
      corr.raw(i, j) = s;
    }
  }
  corr.w = Matrix(k, n);
  Vector column(k);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < k; ++i) column[i] = corr.raw(i, j);
    Vector sm = softmax(column);
    for (std::size_t i = 0; i < k; ++i) corr.w(i, j) = sm[i];
  }
  corr.v = Matrix(k, n);
  Vector row(n);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = corr.raw(i, j);
    Vector sm = softmax(row);
    for (std::size_t j = 0; j < n; ++j) corr.v(i, j) = sm[j];
  }
  return corr;
}

AssignmentTable assign(const CorrelationTensors& corr) {
  const std::size_t k = corr.w.rows;
  const std::size_t n = corr.w.cols;
  if (k < 2) throw std::invalid_argument("assign: need at least 2 prototypes");
  AssignmentTable table;
  table.nearest.resize(n);
  table.second_nearest.resize(n);
  table.update_sets.assign(k, {});
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < k; ++i) {
      if (corr.w(i, j) > corr.w(best, j)) best = i;
    }
    std::size_t second = best == 0 ? 1 : 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (i == best) continue;
      if (corr.w(i, j) > corr.w(second, j)) second = i;
    }
    table.nearest[j] = best;
    table.second_nearest[j] = second;
    table.update_sets[best].push_back(j);
  }
  return table;
}

std::vector<std::vector<double>> relative_weights(const CorrelationTensors& corr,
                                                  const AssignmentTable& table) {
  const std::size_t k = corr.v.rows;
  if (table.update_sets.size() != k) {
    throw std::invalid_argument("relative_weights: table does not match tensors");
  }
  std::vector<std::vector<double>> weights(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& set = table.update_sets[i];
    if (set.empty()) continue;
    double peak = corr.v(i, set[0]);
    for (std::size_t j : set) {
      if (corr.v(i, j) > peak) peak = corr.v(i, j);
    }
    weights[i].reserve(set.size());
    for (std::size_t j : set) weights[i].push_back(corr.v(i, j) / peak);
  }
  return weights;
}

void update_bank(MemoryBank& bank, const Matrix& features,
                 const CorrelationTensors& corr, const AssignmentTable& table) {
  if (features.cols != bank.feature_dim) {
    throw std::invalid_argument("update_bank: feature dim mismatch");
  }
  if (table.update_sets.size() != bank.prototype_count) {
    throw std::invalid_argument("update_bank: table does not match bank");
  }
  std::vector<std::vector<double>> weights = relative_weights(corr, table);
  for (std::size_t k = 0; k < bank.prototype_count; ++k) {
    const auto& set = table.update_sets[k];
    if (set.empty()) continue;
    Vector candidate = bank.prototypes[k];
    for (std::size_t idx = 0; idx < set.size(); ++idx) {
      std::size_t j = set[idx];
      double wgt = weights[k][idx];
      for (std::size_t c = 0; c < features.cols; ++c) {
        candidate[c] += wgt * features(j, c);
      }
    }
    bool degenerate = false;
    Vector normalized = l2_normalize(candidate, &degenerate);
    if (!degenerate) bank.prototypes[k] = std::move(normalized);
  }
}

Vector mean_prototype(const MemoryBank& bank) {
  if (bank.prototypes.empty()) throw std::invalid_argument("mean_prototype: empty bank");
  Vector mean(bank.feature_dim, 0.0);
  for (const Vector& p : bank.prototypes) {
    for (std::size_t c = 0; c < bank.feature_dim; ++c) mean[c] += p[c];
  }
  for (std::size_t c = 0; c < bank.feature_dim; ++c) {
    mean[c] /= static_cast<double>(bank.prototype_count);
  }
  return mean;
}

void save_bank_csv(const MemoryBank& bank, const std::string& path) {
  FileWriter out(path);
  std::fprintf(out.get(), "# bank role=%s K=%zu C=%zu\n", class_role_name(bank.role),
               bank.prototype_count, bank.feature_dim);
  for (const Vector& p : bank.prototypes) {
    for (std::size_t c = 0; c < p.size(); ++c) {
      std::fprintf(out.get(), "%s%s", c == 0 ? "" : ",", format_g17(p[c]).c_str());
    }
    std::fprintf(out.get(), "\n");
  }
}

MemoryBank load_bank_csv(const std::string& path) {
  std::vector<std::string> lines = read_text_lines(path);
  char role_buf[16] = {0};
  std::size_t k = 0;
  std::size_t c = 0;
  if (std::sscanf(lines[0].c_str(), "# bank role=%15s K=%zu C=%zu", role_buf, &k, &c) != 3) {
    throw std::runtime_error(path + ": line 1: malformed bank header");
  }
  std::string role(role_buf);
  MemoryBank bank;
  if (role == "real") {
    bank.role = ClassRole::kReal;
  } else if (role == "fake") {
    bank.role = ClassRole::kFake;
  } else {
    throw std::runtime_error(path + ": line 1: unknown bank role '" + role + "'");
  }
  if (lines.size() != k + 1) {
    throw std::runtime_error(path + ": expected " + std::to_string(k) +
                             " prototype rows, found " + std::to_string(lines.size() - 1));
  }
  bank.prototype_count = k;
  bank.feature_dim = c;
  bank.prototypes.reserve(k);
  for (std::size_t r = 0; r < k; ++r) {
    std::size_t line_no = r + 2;
    std::vector<std::string> fields = split_csv_line(lines[r + 1]);
    if (fields.size() != c) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) + ": expected " +
                               std::to_string(c) + " fields, got " +
                               std::to_string(fields.size()));
    }
    Vector p(c);
    for (std::size_t i = 0; i < c; ++i) {
      p[i] = parse_double_field(fields[i], line_no, path);
    }
    bank.prototypes.push_back(std::move(p));
  }
  return bank;
}

}  // namespace realid
