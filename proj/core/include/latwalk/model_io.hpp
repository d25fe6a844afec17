#pragma once

#include <string>

#include "latwalk/walk_model.hpp"

namespace latwalk {

/// Parses a model description:
///   {"kind": "srw" | "range2" | "skewed" | "custom" | "heavy",
///    "support": [[dx, dy, prob], ...],      // custom only
///    "beta": 7.5, "rmax": 10000, "delta": 0.5,
///    "basis": [[re, im], [re, im]],          // optional, default Z^2
///    "normalize": false}
/// Probabilities may be JSON numbers or strings ("0.25", "1/4").
/// Errors are Error{ParseError} with line/column, or the validation errors
/// of the walk model itself.
WalkModel parse_model(const std::string& text);
WalkModel load_model(const std::string& path);

/// Inverse of parse_model for custom supports; probabilities written with 17
/// significant digits.
std::string model_to_json(const WalkModel& model);

/// Reads a whole file; Error{IoError} when it cannot be opened.
std::string read_file(const std::string& path);

}  // namespace latwalk
