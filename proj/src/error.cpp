#include "palletscope/error.hpp"

namespace palletscope {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::IdenticalLines: return "identical_lines";
    case ErrorCode::InfinitePoint: return "infinite_point";
    case ErrorCode::DegenerateCorrespondence: return "degenerate_correspondence";
    case ErrorCode::MapsToInfinity: return "maps_to_infinity";
    case ErrorCode::DecodeError: return "decode_error";
    case ErrorCode::ImageTooSmall: return "image_too_small";
    case ErrorCode::ConfigError: return "config_error";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::NotEnoughEvidence: return "not_enough_evidence";
    case ErrorCode::InsufficientSupport: return "insufficient_support";
    case ErrorCode::OneSideNotVisible: return "one_side_not_visible";
    case ErrorCode::NoEndpoints: return "no_endpoints";
    case ErrorCode::SharedEdgeMismatch: return "shared_edge_mismatch";
    case ErrorCode::DegenerateMask: return "degenerate_mask";
    case ErrorCode::NoPackagesOnFace: return "no_packages_on_face";
    case ErrorCode::FrequencyInconclusive: return "frequency_inconclusive";
    case ErrorCode::LayerMismatch: return "layer_mismatch";
    case ErrorCode::ClassMismatch: return "class_mismatch";
    case ErrorCode::SchemaError: return "schema_error";
    case ErrorCode::DatasetMismatch: return "dataset_mismatch";
    case ErrorCode::EmptyGroundTruth: return "empty_ground_truth";
    case ErrorCode::SceneOutOfFrame: return "scene_out_of_frame";
    case ErrorCode::IoError: return "io_error";
  }
  return "unknown_error";
}

}  // namespace palletscope
