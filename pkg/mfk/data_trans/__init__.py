'''
Data translators

Readers and writers for the files of a session bundle. Some deal with generic file types
(JSON lines, flat binary matrices) while others are specific to one kind of record housed
in a bundle.

'''
