#pragma once
// Command-line front end. Matrix files are JSON objects
//   {"dims": [n_1, ..., n_k], "entries": [[re, im], ...]}
// with the entries in row-major order; spectrum files are {"values": [...]}.
// Keep-sets on the command line are 1-based ("2,3:rho.json").

#include <iosfwd>
#include <string>
#include <vector>

#include "qmarg/tensorcore.hpp"

namespace qmarg::cli {

enum ExitCode : int { kSuccess = 0, kInputError = 1, kNotConverged = 2 };

/// Raised for malformed files and bad command-line values.
class InputError : public Error {
 public:
  using Error::Error;
};

struct MatrixFile {
  SystemDims dims{std::vector<std::size_t>{1}};
  Matrix entries;
};

MatrixFile parse_matrix(const std::string& text);
/// Shortest round-trip decimal form, so read(write(m)) is bit-exact.
std::string format_matrix(const MatrixFile& file);
MatrixFile load_matrix(const std::string& path);
void save_matrix(const std::string& path, const MatrixFile& file);

/// Hermitian within 1e-9 (absolute, entrywise), else InputError.
HermitianMatrix as_hermitian(const MatrixFile& file, const std::string& what);

std::vector<double> load_values(const std::string& path);

/// Runs one command line (without the program name). Diagnostics go to
/// `err`, summaries and small outputs to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qmarg::cli
