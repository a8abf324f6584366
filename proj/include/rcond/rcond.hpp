#ifndef RCOND_RCOND_HPP_
#define RCOND_RCOND_HPP_

#include "rcond/model.hpp"
#include "rcond/network_io.hpp"
#include "rcond/varset.hpp"
#include "rcond/dtree.hpp"
#include "rcond/dtree_io.hpp"
#include "rcond/spaces.hpp"
#include "rcond/kb.hpp"
#include "rcond/engine.hpp"
#include "rcond/random_network.hpp"
#include "rcond/report.hpp"

#endif  // RCOND_RCOND_HPP_
