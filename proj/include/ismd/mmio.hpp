#pragma once

#include <string>

#include "ismd/types.hpp"

namespace ismd {

/// Matrix Market I/O. Writers emit 17 significant digits so a read-back
/// reproduces the stored values exactly. Symmetric matrices are written
/// with the `symmetric` qualifier (lower triangle); sparse content uses
/// coordinate format, dense content array format.
void write_matrix_market(const std::string& path, const Matrix& m,
                         bool symmetric = false);
Matrix read_matrix_market(const std::string& path);

/// Convenience wrappers for whole-file JSON.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace ismd
