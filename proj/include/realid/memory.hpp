#ifndef REALID_MEMORY_HPP_
#define REALID_MEMORY_HPP_

#include <string>
#include <vector>

#include "realid/numerics.hpp"

namespace realid {

enum class ClassRole { kReal, kFake };

const char* class_role_name(ClassRole role);

/// K unit-norm prototype vectors for one class.
struct MemoryBank {
  ClassRole role = ClassRole::kReal;
  std::size_t prototype_count = 0;  // K
  std::size_t feature_dim = 0;      // C
  std::vector<Vector> prototypes;
};

/// Random unit prototypes. Requires K >= 2 and C >= 1.
MemoryBank init_bank(std::size_t prototype_count, std::size_t feature_dim,
                     ClassRole role, SeededRng& rng);

/// raw(i, j) = <prototype_i, feature_j> for a K x N batch;
/// w normalizes each feature column over the prototypes (which prototype
/// claims this feature), v normalizes each prototype row over the features
/// (how much each feature contributes to this prototype).
struct CorrelationTensors {
  Matrix raw;  // K x N
  Matrix w;    // column-wise softmax of raw
  Matrix v;    // row-wise softmax of raw
};

/// features is N x C with N >= 1. Feature rows are consumed as given;
/// callers wanting cosine correlation normalize beforehand.
CorrelationTensors correlate(const MemoryBank& bank, const Matrix& features);

struct AssignmentTable {
  std::vector<std::size_t> nearest;         // per feature, argmax_i w(i, j)
  std::vector<std::size_t> second_nearest;  // runner-up, never equal to nearest
  std::vector<std::vector<std::size_t>> update_sets;  // per prototype, ascending
};

/// Ties break toward the lowest prototype index. The update sets partition
/// the batch: feature j lands in exactly update_sets[nearest[j]].
AssignmentTable assign(const CorrelationTensors& corr);

/// Per update set, v entries rescaled so the strongest member is 1:
/// weights[k][i] belongs to update_sets[k][i]. Empty sets yield empty rows.
std::vector<std::vector<double>> relative_weights(const CorrelationTensors& corr,
                                                  const AssignmentTable& table);

/// m_k <- normalize(m_k + sum of weighted assigned features), summed in
/// ascending feature index. Prototypes with an empty update set, or whose
/// updated sum is degenerate, stay untouched.
void update_bank(MemoryBank& bank, const Matrix& features,
                 const CorrelationTensors& corr, const AssignmentTable& table);

/// Arithmetic mean of the prototypes. Deliberately not renormalized.
Vector mean_prototype(const MemoryBank& bank);

/// CSV with a "# bank role=<real|fake> K=<K> C=<C>" header line, one
/// prototype per row, 17 significant digits.
void save_bank_csv(const MemoryBank& bank, const std::string& path);
MemoryBank load_bank_csv(const std::string& path);

}  // namespace realid

#endif  // REALID_MEMORY_HPP_
