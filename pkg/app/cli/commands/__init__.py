# Subcommands of the loadid command line
