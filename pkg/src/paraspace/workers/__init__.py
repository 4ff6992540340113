"""Reference compute nodes speaking the line protocol over stdio or TCP."""
