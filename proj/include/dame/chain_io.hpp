#pragma once

#include <filesystem>
#include <vector>

#include "dame/model.hpp"

namespace dame {

// One CSV per parameter family, header `draw,<index columns>,value`, indices
// and draws 1-based:
//   beta.csv     draw,p,t,value
//   theta.csv    draw,i,t,value
//   d.csv        draw,r,t,value
//   u.csv        draw,t,i,r,value
//   tau_u.csv    draw,r,t,value
//   sigma2.csv   draw,value
//   hyper.csv    draw,block,index,param,value
//   imputed.csv  draw,t,i,j,value
// Values use the shortest round-trip decimal form, so reading the files back
// restores every draw exactly.
void write_draws(const std::filesystem::path& dir, const Model& model, const std::vector<ParameterState>& draws);

std::vector<ParameterState> read_draws(const std::filesystem::path& dir, const Model& model);

}  // namespace dame
