#pragma once

#include <stdexcept>
#include <string>

namespace mipcad {

// Base of all pipeline failures. The CLI maps dependency_error to exit
// code 2 and every other mipcad::error to exit code 1.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File exists but cannot be parsed.
class format_error : public error {
public:
    using error::error;
};

// Header and payload disagree (e.g. raw file shorter than DimSize implies).
class integrity_error : public error {
public:
    using error::error;
};

// Caller violated a documented precondition.
class contract_error : public error {
public:
    using error::error;
};

// User-supplied value outside its valid range.
class parameter_error : public error {
public:
    using error::error;
};

// Volume geometry the pipeline does not support.
class geometry_error : public error {
public:
    using error::error;
};

// Lung segmentation could not find a plausible lung region.
class segmentation_error : public error {
public:
    using error::error;
};

// A pipeline stage was requested before its upstream artifacts exist.
class dependency_error : public error {
public:
    using error::error;
};

}  // namespace mipcad
