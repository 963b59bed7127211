#pragma once

#include "netpol/assignment.hpp"
#include "netpol/biclique.hpp"
#include "netpol/engine.hpp"
#include "netpol/errors.hpp"
#include "netpol/estimands.hpp"
#include "netpol/exposure.hpp"
#include "netpol/graph.hpp"
#include "netpol/policy.hpp"
#include "netpol/random.hpp"
#include "netpol/science.hpp"
