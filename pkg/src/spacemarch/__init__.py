"""Space-marching compact implicit schemes for advection on pipe networks."""
