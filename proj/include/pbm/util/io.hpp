#pragma once

#include <stdexcept>
#include <string>

namespace pbm::util {

/// File-system failure (missing input, unwritable output).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);
/// Creates parent directories as needed.
void write_file(const std::string& path, const std::string& content);

}  // namespace pbm::util
