# Command line surface
