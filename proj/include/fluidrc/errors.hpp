#pragma once

#include <stdexcept>
#include <string>

namespace fluidrc {

/// Invalid parameter or configuration value. CLI exit code 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed, missing or inconsistently shaped data. CLI exit code 3.
class data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Array or series length mismatch.
class dimension_error : public data_error {
public:
    using data_error::data_error;
};

/// Training produced a non-finite loss. CLI exit code 4.
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& what, int epoch)
        : std::runtime_error(what), epoch_(epoch)
    {
    }
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

} // namespace fluidrc
