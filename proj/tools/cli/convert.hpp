#pragma once

#include <string>
#include <vector>

#include "ttk/model.hpp"

namespace ttk::cli {

enum class ConvertMethod { tt, tucker };

struct LayerConversion {
  Index layer = 0;          // hidden layer number
  double rel_error = 0.0;   // ||W - W_hat||_F / ||W||_F
  Index params_before = 0;  // weights only
  Index params_after = 0;
  std::string ranks;
};

struct ConversionResult {
  Model model;
  std::vector<LayerConversion> layers;
};

// Replaces every hidden FC layer of a dense-head model. `rank` 0 keeps full
// TT ranks (exact) or the Tucker preset; otherwise it caps interior TT ranks
// or every Tucker mode rank. Throws StateError for a non-dense head.
ConversionResult convert_head(const Model& dense, ConvertMethod method, Index rank);

}  // namespace ttk::cli
