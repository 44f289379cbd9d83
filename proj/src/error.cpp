#include "cup/error.hpp"

namespace cup {

namespace {
std::string compose(const std::string& module, const std::string& variant, const std::string& detail) {
    std::string out = module + ": " + variant;
    if (!detail.empty()) {
        out += "(" + detail + ")";
    }
    return out;
}
} // namespace

Error::Error(std::string module, std::string variant, std::string detail)
    : std::runtime_error(compose(module, variant, detail)),
      module_(std::move(module)),
      variant_(std::move(variant)),
      detail_(std::move(detail)) {}

} // namespace cup
