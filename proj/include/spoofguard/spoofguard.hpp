// Umbrella header: the whole toolkit.
#pragma once

#include "spoofguard/autoencoder.hpp"
#include "spoofguard/chansim.hpp"
#include "spoofguard/detector.hpp"
#include "spoofguard/evalkit.hpp"
#include "spoofguard/imaging.hpp"
#include "spoofguard/iq.hpp"
#include "spoofguard/iq_io.hpp"
#include "spoofguard/lbfgs.hpp"
#include "spoofguard/model_io.hpp"
#include "spoofguard/rng.hpp"
