# Numerical engines: special functions, channel statistics, ASER, simulation
