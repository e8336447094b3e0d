#include "featgenn/reference.hpp"

#include <algorithm>

namespace featgenn {

const std::vector<DatasetReference>& paper_references() {
  // clang-format off
  static const std::vector<DatasetReference> refs{
    {"spambase", "SpamBase", 4601, 57,
     0.9102, 0.9422, 0.011, 0.9530, 0.016,
     0.9102, 0.9237, 0.9102, 0.9237, 0.9296, 0.9339, 0.9530, 0.016, 0.9644,
     1, 46, 57, 1, 1},
    {"megawatt1", "Megawatt1", 253, 37,
     0.8890, 0.9148, 0.002, 0.9151, 0.002,
     0.8890, 0.8973, 0.8773, 0.8893, 0.9130, 0.9171, 0.9151, 0.002, 0.9171,
     8, 48, 37, 29, 8},
    {"ionosphere", "Ionosphere", 351, 34,
     0.9233, 0.9587, 0.012, 0.9667, 0.004,
     0.9233, 0.9344, 0.9175, 0.9117, 0.9516, 0.9770, 0.9644, 0.012, 0.9713,
     1, 52, 34, 1, 1},
    {"spectf", "SpectF", 267, 44,
     0.7750, 0.8682, 0.018, 0.8776, 0.013,
     0.7750, 0.8277, 0.7906, 0.8161, 0.8501, 0.8612, 0.8776, 0.013, 0.8802,
     8, 37, 44, 9, 8},
    {"credit_default", "Credit_Default", 30000, 25,
     0.8037, 0.8092, 0.003, 0.8095, 0.003,
     0.8037, 0.8060, 0.8059, 0.8060, 0.8049, 0.8096, 0.8095, 0.003, 0.8102,
     4, 30, 25, 5, 4},
    {"german_credit", "German Credit", 1001, 24,
     0.7401, 0.7775, 0.006, 0.7814, 0.002,
     0.7410, 0.7550, 0.7490, 0.7600, 0.7818, 0.7770, 0.7814, 0.002, 0.7827,
     1, 22, 24, 1, 1},
  };
  // clang-format on
  return refs;
}

const DatasetReference* find_reference(std::string_view key) {
  const auto& refs = paper_references();
  auto it = std::find_if(refs.begin(), refs.end(), [&](const DatasetReference& r) { return r.key == key; });
  return it == refs.end() ? nullptr : &*it;
}

}  // namespace featgenn
