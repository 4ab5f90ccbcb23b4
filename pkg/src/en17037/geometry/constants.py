# Self-intersection epsilon (metres along the ray).  Hits at t <= SELF_EPS are
# ignored, and hits closer together than SELF_EPS collapse into one.
SELF_EPS = 1e-4
