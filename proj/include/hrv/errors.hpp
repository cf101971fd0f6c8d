#pragma once

#include <stdexcept>
#include <string>

namespace hrv {

// All library failures derive from Error and carry a short machine-readable
// id (stable across releases) plus a human message.
class Error : public std::runtime_error {
public:
    Error(std::string id, const std::string& msg)
        : std::runtime_error(id + ": " + msg), id_(std::move(id)) {}
    const std::string& id() const noexcept { return id_; }

private:
    std::string id_;
};

struct InvalidSpecError : Error {
    explicit InvalidSpecError(const std::string& msg) : Error("invalid-spec", msg) {}
};

struct InsufficientDataError : Error {
    explicit InsufficientDataError(const std::string& msg) : Error("insufficient-data", msg) {}
};

struct ModalityError : Error {
    explicit ModalityError(const std::string& msg) : Error("modality-error", msg) {}
};

struct ManifestError : Error {
    explicit ManifestError(const std::string& msg) : Error("manifest-error", msg) {}
};

struct IngestionError : Error {
    explicit IngestionError(const std::string& msg) : Error("ingestion-error", msg) {}
};

struct TableFormatError : Error {
    explicit TableFormatError(const std::string& msg) : Error("table-format-error", msg) {}
};

struct CalibrationError : Error {
    explicit CalibrationError(const std::string& msg) : Error("calibration-error", msg) {}
};

struct EmptyTableError : Error {
    explicit EmptyTableError(const std::string& msg) : Error("empty-table-error", msg) {}
};

struct DegenerateLabelsError : Error {
    explicit DegenerateLabelsError(const std::string& msg) : Error("degenerate-labels", msg) {}
};

struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& msg) : Error("convergence-error", msg) {}
};

struct DivergenceError : Error {
    explicit DivergenceError(const std::string& msg) : Error("divergence-error", msg) {}
};

struct SchemaError : Error {
    explicit SchemaError(const std::string& msg) : Error("schema-error", msg) {}
};

struct ModelFormatError : Error {
    explicit ModelFormatError(const std::string& msg) : Error("model-format-error", msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io-error", msg) {}
};

}  // namespace hrv
