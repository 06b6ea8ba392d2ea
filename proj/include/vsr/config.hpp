#pragma once

// Run-configuration file: plain "section.key = value" text mirroring the
// training, network, and loss config structs. Unknown keys are rejected and
// every struct invariant is enforced at parse time.

#include <string>

#include "vsr/losses.hpp"
#include "vsr/models.hpp"
#include "vsr/training.hpp"

namespace vsr {

struct RunConfig {
  TrainConfig train;
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  FeatureNetSpec feat;
  std::string data_path;
};

// '#' starts a comment; blank lines are skipped; later keys override earlier
// ones. parse(serialize(c)) reproduces every field exactly.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& c);

const char* to_string(PixelLossKind k);
const char* to_string(GanMode m);
PixelLossKind pixel_loss_from_string(const std::string& s);
GanMode gan_mode_from_string(const std::string& s);

}  // namespace vsr
