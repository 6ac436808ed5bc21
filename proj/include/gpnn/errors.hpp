#pragma once

#include <stdexcept>
#include <string>

namespace gpnn {

#define GPNN_ERROR(Name)                                    \
  struct Name : std::runtime_error {                        \
    explicit Name(const std::string& msg)                   \
        : std::runtime_error(std::string(#Name ": ") + msg) {} \
  }

GPNN_ERROR(ConstantMatrix);
GPNN_ERROR(DegenerateGame);
GPNN_ERROR(NotCoordinationGame);
GPNN_ERROR(TracingFailure);
GPNN_ERROR(EmptyEquilibriumList);
GPNN_ERROR(NonFiniteUpdate);
GPNN_ERROR(InsufficientData);
GPNN_ERROR(ConfigError);
GPNN_ERROR(CheckpointFormatError);
GPNN_ERROR(ShapeMismatch);
GPNN_ERROR(ParseError);
GPNN_ERROR(EmptyTestSet);

#undef GPNN_ERROR

}  // namespace gpnn
