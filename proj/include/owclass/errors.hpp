#pragma once

#include <stdexcept>
#include <string>

namespace owclass {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// taxonomy
struct WrongHasNoScore : Error { using Error::Error; };
struct UnknownGroundTruth : Error { using Error::Error; };
struct HierarchyError : Error { using Error::Error; };

// judge
struct RemoteUnavailable : Error { using Error::Error; };
struct InvalidJudgeOutput : Error { using Error::Error; };

// reward
struct EmptyGroup : Error { using Error::Error; };
struct MissingWeight : Error { using Error::Error; };
struct ContractViolation : Error { using Error::Error; };

// metrics
struct EmptyDataset : Error { using Error::Error; };
struct AllWrong : Error { using Error::Error; };
struct BothZero : Error { using Error::Error; };

// simulator
struct DegenerateGroup : Error { using Error::Error; };

// io / config
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace owclass
