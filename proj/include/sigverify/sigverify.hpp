#pragma once

#include "sigverify/byy.hpp"
#include "sigverify/dataset.hpp"
#include "sigverify/dtw.hpp"
#include "sigverify/em.hpp"
#include "sigverify/errors.hpp"
#include "sigverify/features.hpp"
#include "sigverify/mixture.hpp"
#include "sigverify/model_io.hpp"
#include "sigverify/protocol.hpp"
#include "sigverify/random.hpp"
#include "sigverify/raw_signature.hpp"
#include "sigverify/svc2004.hpp"
#include "sigverify/synthetic.hpp"
#include "sigverify/verify.hpp"
