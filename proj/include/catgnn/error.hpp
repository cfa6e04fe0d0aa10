#pragma once

#include <stdexcept>
#include <string>

namespace catgnn {

// Base class for everything the library throws on contract violations.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidInput : Error {
    using Error::Error;
};
struct DuplicateId : Error {
    using Error::Error;
};
struct SchemaError : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct IndexError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ShapeError : Error {
    using Error::Error;
};
struct SegmentError : Error {
    using Error::Error;
};
struct NumericsError : Error {
    using Error::Error;
};
struct ContractError : Error {
    using Error::Error;
};
struct EmptyNeighborhood : Error {
    using Error::Error;
};
struct NoCausalNodes : Error {
    using Error::Error;
};
struct InvalidSplit : Error {
    using Error::Error;
};
struct UndefinedMetric : Error {
    using Error::Error;
};

}  // namespace catgnn
