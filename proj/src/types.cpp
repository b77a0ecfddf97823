#include "netgan/types.hpp"

#include "netgan/errors.hpp"

namespace netgan {

void Dataset::validate() const {
    if (values.cols() < 1 || values.rows() < 1) throw ShapeError("dataset must have at least one series and one step");
    if (names.size() != series_count()) {
        throw ShapeError("dataset has " + std::to_string(names.size()) + " names for " +
                         std::to_string(series_count()) + " series");
    }
    if (!values.allFinite()) throw InvalidArgument("dataset contains non-finite values");
    if (labels) {
        if (labels->size() != length()) {
            throw ShapeError("label vector has length " + std::to_string(labels->size()) + ", expected " +
                             std::to_string(length()));
        }
        for (const auto l : *labels) {
            if (l > 1) throw InvalidArgument("labels must be 0 or 1");
        }
    }
}

}  // namespace netgan
