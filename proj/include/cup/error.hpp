#pragma once

#include <stdexcept>
#include <string>

namespace cup {

// Domain error raised by every module. `variant` is the stable error name
// (e.g. "DuplicateAreaId"); `detail` names the offending object when there is one.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string variant, std::string detail = {});

    const std::string& module() const noexcept { return module_; }
    const std::string& variant() const noexcept { return variant_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string module_;
    std::string variant_;
    std::string detail_;
};

} // namespace cup
