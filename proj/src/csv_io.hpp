#pragma once

#include <string>
#include <vector>

#include "tensor.hpp"

namespace recidx {

struct CsvRecord {
  std::string id;
  int label = 0;
  Vec x;
};

// Embedding CSV: header `id,label,x0,...,x{d-1}`; label -1 marks UNLABELED/UI;
// floats printed with 17 significant digits so files round-trip exactly.
void write_embedding_csv(const std::string& path, const std::vector<CsvRecord>& rows);
std::vector<CsvRecord> read_embedding_csv(const std::string& path);

std::string fmt_g17(double value);

// Instance ids carry the generator's difficulty mark (`c003_h017` vs `c003_e017`).
bool id_marks_hard(const std::string& id);

}  // namespace recidx
