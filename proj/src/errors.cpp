#include "uqbench/errors.hpp"

namespace uqbench {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::zero_sigma: return "ZeroSigma";
    case Errc::negative_sigma: return "NegativeSigma";
    case Errc::too_few_samples: return "TooFewSamples";
    case Errc::too_few_members: return "TooFewMembers";
    case Errc::single_class: return "SingleClass";
    case Errc::constant_input: return "ConstantInput";
    case Errc::degenerate_fit: return "DegenerateFit";
    case Errc::join_failure: return "JoinFailure";
    case Errc::uncalibrated_input: return "UncalibratedInput";
    case Errc::empty_train_set: return "EmptyTrainSet";
    case Errc::dim_mismatch: return "DimMismatch";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::parse_error: return "ParseError";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::ragged_frames: return "RaggedFrames";
    case Errc::bad_magic: return "BadMagic";
    case Errc::version_unsupported: return "VersionUnsupported";
    case Errc::truncated_file: return "TruncatedFile";
    case Errc::io_failure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace uqbench
